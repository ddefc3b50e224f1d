#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "zakai/errors.hpp"

namespace zakai {

/// Pre-factored constant-coefficient tridiagonal system (Thomas algorithm, no
/// pivoting), optionally cyclic via Sherman-Morrison. Factorisation is done once;
/// each solve is a forward and a backward substitution.
class TridiagonalFactor {
 public:
  TridiagonalFactor() = default;

  /// Rows r = 0..m-1 with sub*x[r-1] + diag*x[r] + super*x[r+1]. Cyclic systems wrap
  /// the first sub and last super entries. Throws NumericalError when the rows are
  /// not diagonally dominant or a pivot vanishes; `what` names the line family.
  TridiagonalFactor(std::size_t m, double sub, double diag, double super, bool cyclic,
                    const std::string& what = "line")
      : m_(m), cyclic_(cyclic) {
    if (m == 0) return;
    if (cyclic && m < 3) throw ConfigError("cyclic tridiagonal system needs at least 3 rows");
    if (std::abs(diag) < std::abs(sub) + std::abs(super)) {
      throw NumericalError("tridiagonal breakdown: " + what + " rows not diagonally dominant (line 0, |diag|=" +
                           std::to_string(std::abs(diag)) +
                           " < |sub|+|super|=" + std::to_string(std::abs(sub) + std::abs(super)) + ")");
    }
    std::vector<double> d(m, diag);
    double gamma = 0.0;
    if (cyclic_) {
      gamma = -diag;
      d.front() = diag - gamma;
      d.back() = diag - super * sub / gamma;
    }
    sub_.assign(m, sub);
    sub_[0] = 0.0;
    cp_.assign(m, 0.0);
    inv_.assign(m, 0.0);
    ainv_.assign(m, 0.0);
    double prev_cp = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      const double denom = d[r] - sub_[r] * prev_cp;
      if (std::abs(denom) < 1e-300) {
        throw NumericalError("tridiagonal breakdown: zero pivot in " + what + " at row " + std::to_string(r));
      }
      inv_[r] = 1.0 / denom;
      ainv_[r] = sub_[r] * inv_[r];
      cp_[r] = (r + 1 < m) ? super * inv_[r] : 0.0;
      prev_cp = cp_[r];
    }
    if (cyclic_) {
      z_.assign(m, 0.0);
      z_.front() = gamma;
      z_.back() = super;
      solve_plain(z_);
      vfac_ = sub / gamma;
      denom_sm_ = 1.0 + z_.front() + vfac_ * z_.back();
    }
  }

  std::size_t size() const { return m_; }
  bool cyclic() const { return cyclic_; }

  /// Forward-elimination step for row r of a batched solve (see solve_rows);
  /// `prev` is row r-1 (ignored for r == 0).
  void forward_row(std::size_t r, double* __restrict row, const double* __restrict prev, std::size_t width) const {
    const double inv = inv_[r];
    if (r == 0) {
      for (std::size_t s = 0; s < width; ++s) row[s] *= inv;
    } else {
      const double ai = ainv_[r];
      for (std::size_t s = 0; s < width; ++s) row[s] = row[s] * inv - ai * prev[s];
    }
  }

  /// Back-substitution step for row r < m-1 of a batched solve.
  void backward_row(std::size_t r, double* __restrict row, const double* __restrict next, std::size_t width) const {
    const double c = cp_[r];
    for (std::size_t s = 0; s < width; ++s) row[s] -= c * next[s];
  }

  void solve(std::span<double> x) const {
    solve_plain(x);
    if (cyclic_) {
      const double s = (x.front() + vfac_ * x.back()) / denom_sm_;
      for (std::size_t r = 0; r < m_; ++r) x[r] -= s * z_[r];
    }
  }

  /// Solves `width` independent systems at once. Entry r of system s lives at
  /// data[r * row_stride + s], so the inner loop is contiguous.
  void solve_rows(double* data, std::size_t row_stride, std::size_t width) const {
    for (std::size_t r = 0; r < m_; ++r) {
      double* row = data + r * row_stride;
      const double inv = inv_[r];
      if (r == 0) {
        for (std::size_t s = 0; s < width; ++s) row[s] *= inv;
      } else {
        const double ai = ainv_[r];
        const double* prev = row - row_stride;
        for (std::size_t s = 0; s < width; ++s) row[s] = row[s] * inv - ai * prev[s];
      }
    }
    for (std::size_t r = m_ - 1; r-- > 0;) {
      double* row = data + r * row_stride;
      const double* next = row + row_stride;
      const double c = cp_[r];
      for (std::size_t s = 0; s < width; ++s) row[s] -= c * next[s];
    }
    if (cyclic_) {
      const double* first = data;
      const double* last = data + (m_ - 1) * row_stride;
      std::vector<double> sc(width);
      for (std::size_t s = 0; s < width; ++s) sc[s] = (first[s] + vfac_ * last[s]) / denom_sm_;
      for (std::size_t r = 0; r < m_; ++r) {
        double* row = data + r * row_stride;
        const double zr = z_[r];
        for (std::size_t s = 0; s < width; ++s) row[s] -= sc[s] * zr;
      }
    }
  }

  /// Solves `count` systems stored contiguously (entry r of system s at
  /// data[s * sys_stride + r]); blocks of systems are interleaved so the
  /// independent recurrences pipeline.
  void solve_lines(double* data, std::size_t sys_stride, std::size_t count) const {
    constexpr std::size_t kBlock = 8;
    std::size_t s0 = 0;
    for (; s0 + kBlock <= count; s0 += kBlock) solve_block<kBlock>(data + s0 * sys_stride, sys_stride);
    for (; s0 < count; ++s0) solve(std::span<double>(data + s0 * sys_stride, m_));
  }

 private:
  void solve_plain(std::span<double> x) const {
    x[0] *= inv_[0];
    for (std::size_t r = 1; r < m_; ++r) x[r] = x[r] * inv_[r] - ainv_[r] * x[r - 1];
    for (std::size_t r = m_ - 1; r-- > 0;) x[r] -= cp_[r] * x[r + 1];
  }

  template <std::size_t B>
  void solve_block(double* base, std::size_t sys_stride) const {
    double* p[B];
    double carry[B];
    for (std::size_t b = 0; b < B; ++b) {
      p[b] = base + b * sys_stride;
      carry[b] = p[b][0] * inv_[0];
      p[b][0] = carry[b];
    }
    for (std::size_t r = 1; r < m_; ++r) {
      const double ai = ainv_[r], inv = inv_[r];
      for (std::size_t b = 0; b < B; ++b) {
        carry[b] = p[b][r] * inv - ai * carry[b];
        p[b][r] = carry[b];
      }
    }
    for (std::size_t r = m_ - 1; r-- > 0;) {
      const double c = cp_[r];
      for (std::size_t b = 0; b < B; ++b) {
        carry[b] = p[b][r] - c * carry[b];
        p[b][r] = carry[b];
      }
    }
    if (cyclic_) {
      for (std::size_t b = 0; b < B; ++b) {
        const double s = (p[b][0] + vfac_ * p[b][m_ - 1]) / denom_sm_;
        for (std::size_t r = 0; r < m_; ++r) p[b][r] -= s * z_[r];
      }
    }
  }

  std::size_t m_ = 0;
  bool cyclic_ = false;
  std::vector<double> sub_;
  std::vector<double> cp_;
  std::vector<double> inv_;
  std::vector<double> ainv_;  // sub * inv, for the fused forward recurrence
  std::vector<double> z_;
  double vfac_ = 0.0;
  double denom_sm_ = 1.0;
};

}  // namespace zakai
