#pragma once
// Neumaier-compensated accumulation. Cluster sums run over up to ~10^6 entries
// spanning many orders of magnitude, so plain accumulation loses digits that
// the mass-conservation checks need.

#include <cmath>
#include <cstddef>
#include <span>

namespace bdlab {

class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

  void reset() { sum_ = comp_ = 0.0; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> v) {
  NeumaierSum s;
  for (double x : v) s.add(x);
  return s.value();
}

// sum of (i + 1) * v[i], i.e. sum n * c_n for a 1-based cluster vector
inline double compensated_weighted_sum(std::span<const double> v) {
  NeumaierSum s;
  for (std::size_t i = 0; i < v.size(); ++i) s.add(static_cast<double>(i + 1) * v[i]);
  return s.value();
}

}  // namespace bdlab
