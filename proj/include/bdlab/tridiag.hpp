#pragma once
// Thomas solve for the implicit stages. All stage matrices here are
// I - h*T with T a column-diagonally-dominant tridiagonal generator
// (columns of T sum to <= 0), so elimination without pivoting is stable.

#include <cstddef>
#include <span>

namespace bdlab {

struct TriRow {
  double lo;  // coefficient of x_{i-1}
  double di;  // coefficient of x_i
  double up;  // coefficient of x_{i+1}
};

// Solve (I - h*T) x = b where row(i) yields the i-th row of T.
// Assembly is fused into the forward sweep; cp is scratch of size n.
template <class RowFn>
void solve_identity_minus_tridiag(double h, std::size_t n, RowFn&& row,
                                  std::span<const double> b, std::span<double> x,
                                  std::span<double> cp) {
  TriRow r = row(std::size_t{0});
  double inv = 1.0 / (1.0 - h * r.di);
  cp[0] = -h * r.up * inv;
  x[0] = b[0] * inv;
  for (std::size_t i = 1; i < n; ++i) {
    r = row(i);
    const double lo = -h * r.lo;
    inv = 1.0 / ((1.0 - h * r.di) - lo * cp[i - 1]);
    cp[i] = -h * r.up * inv;
    x[i] = (b[i] - lo * x[i - 1]) * inv;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
}

}  // namespace bdlab
