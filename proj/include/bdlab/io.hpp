#pragma once
// Deterministic file output: CSV bodies are byte-stable across runs of the
// same build (shortest round-trip decimals, fixed row order), and every file
// is content-hashed for the run manifest.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bdlab {

// shortest decimal that round-trips the double
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
  return std::string(buf);
}

// Accumulates the whole file in memory so the manifest hash covers exactly
// the written bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) body_ += ',';
      body_ += h;
      first = false;
    }
    body_ += '\n';
  }

  void field(double v) { cell(format_double(v)); }
  void field(std::size_t v) { cell(std::to_string(v)); }
  void field(std::string_view v) { cell(std::string(v)); }

  void end_row() {
    body_ += '\n';
    row_open_ = false;
  }

  template <class... Ts>
  void row(Ts... vals) {
    (field(vals), ...);
    end_row();
  }

  const std::string& body() const { return body_; }

 private:
  void cell(const std::string& s) {
    if (row_open_) body_ += ',';
    body_ += s;
    row_open_ = true;
  }

  std::string body_;
  bool row_open_ = false;
};

struct WrittenFile {
  std::string path;   // relative to the run directory
  std::size_t bytes = 0;
  std::string fnv1a64;
};

inline WrittenFile write_file(const std::filesystem::path& dir, const std::string& rel,
                              std::string_view content) {
  const auto full = dir / rel;
  std::filesystem::create_directories(full.parent_path());
  std::ofstream out(full, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + full.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("write failed: " + full.string());
  return WrittenFile{rel, content.size(), fnv1a64_hex(content)};
}

}  // namespace bdlab
