#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "core.hpp"

namespace axinsm {

// Real matrix with two sub- and two super-diagonals. Entry (i, j) lives at
// band[i][j - i + 2].
class PentaMatrix {
 public:
  PentaMatrix() = default;
  explicit PentaMatrix(int n) : band_(n, {0, 0, 0, 0, 0}) {}

  int size() const { return static_cast<int>(band_.size()); }
  double& at(int i, int j) { return band_[i][j - i + 2]; }
  double at(int i, int j) const { return band_[i][j - i + 2]; }
  std::array<double, 5>& row(int i) { return band_[i]; }

  static PentaMatrix identity(int n) {
    PentaMatrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  // this = a*this + b*I
  PentaMatrix scaled_shift(double a, double b) const {
    PentaMatrix m = *this;
    for (int i = 0; i < size(); ++i) {
      for (double& v : m.band_[i]) v *= a;
      m.band_[i][2] += b;
    }
    return m;
  }

  // Replace row i by the unit row (fixes x_i to the right-hand side value).
  void pin(int i) {
    band_[i] = {0, 0, 1, 0, 0};
  }

 private:
  std::vector<std::array<double, 5>> band_;
};

// LU without pivoting; every matrix factored here is (after diagonal scaling)
// symmetric definite or a pinned semidefinite chain.
class PentaLU {
 public:
  explicit PentaLU(PentaMatrix m, const char* what = "radial system", int mode = -1) : lu_(std::move(m)) {
    const int n = lu_.size();
    for (int k = 0; k < n; ++k) {
      const double pivot = lu_.at(k, k);
      if (!(std::abs(pivot) > 1e-300) || !std::isfinite(pivot))
        throw NumericalError(std::string(what) + ": singular pivot at row " + std::to_string(k) +
                             (mode >= 0 ? " for axial wavenumber " + std::to_string(mode) : ""));
      for (int i = k + 1; i <= std::min(k + 2, n - 1); ++i) {
        const double l = lu_.at(i, k) / pivot;
        lu_.at(i, k) = l;
        for (int j = k + 1; j <= std::min(k + 2, n - 1); ++j) lu_.at(i, j) -= l * lu_.at(k, j);
      }
    }
  }

  template <class T>
  void solve_in_place(std::vector<T>& x) const {
    const int n = lu_.size();
    for (int i = 0; i < n; ++i)
      for (int j = std::max(0, i - 2); j < i; ++j) x[i] -= lu_.at(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j <= std::min(i + 2, n - 1); ++j) x[i] -= lu_.at(i, j) * x[j];
      x[i] /= lu_.at(i, i);
    }
  }

 private:
  PentaMatrix lu_;
};

}  // namespace axinsm
