// Dense row-major complex matrix plus the handful of operations the
// calibration pipeline needs. Deliberately small: products, conjugate
// transpose, MSE, Gaussian fills, Haar-like unitaries via Gram-Schmidt QR,
// and a pivoted solve for the normal equations.
#ifndef MIMOCAL_COMPLEX_MATRIX_HPP
#define MIMOCAL_COMPLEX_MATRIX_HPP

#include <complex>
#include <cstddef>
#include <vector>

#include "mimocal/rng.hpp"

namespace mimocal {

using cxd = std::complex<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() : rows_(0), cols_(0) {}
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cxd> data);

  static ComplexMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  cxd& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cxd& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  // Bounds-checked element access.
  cxd& at(std::size_t r, std::size_t c);
  const cxd& at(std::size_t r, std::size_t c) const;

  std::vector<cxd>& data() { return data_; }
  const std::vector<cxd>& data() const { return data_; }

  ComplexMatrix transpose() const;
  ComplexMatrix conj_transpose() const;

  ComplexMatrix row(std::size_t r) const;  // 1 x cols
  ComplexMatrix col(std::size_t c) const;  // rows x 1
  void set_row(std::size_t r, const ComplexMatrix& v);
  void set_col(std::size_t c, const ComplexMatrix& v);

  bool same_shape(const ComplexMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

  // Exact bit-level equality (distinguishes -0.0; NaN never occurs here).
  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b);

 private:
  std::size_t rows_, cols_;
  std::vector<cxd> data_;
};

// a (m x k) times b (k x n). Shape mismatch -> ShapeError naming both shapes.
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix add(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix sub(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix scale(const ComplexMatrix& a, cxd s);

enum class MseNorm { kSum, kMean };

// Sum (or per-entry mean) of squared modulus differences.
double mse_between(const ComplexMatrix& a, const ComplexMatrix& b,
                   MseNorm norm);

// rows x cols matrix of i.i.d. CN(0, variance) entries. variance >= 0.
// Draws sqrt(variance) * unit draws, so matched streams scale exactly.
ComplexMatrix sample_complex_gaussian(Rng& rng, std::size_t rows,
                                      std::size_t cols, double variance);

// Haar-like m x m unitary: Gram-Schmidt QR of a CN(0,1) matrix. MGS leaves
// the R diagonal real-positive (the Haar convention), so Q needs no phase
// fix-up. U^H U = I within 1e-10 contract.
ComplexMatrix random_unitary(Rng& rng, std::size_t m);

// Solves A X = B by Gaussian elimination with partial pivoting. A must be
// square. Pivot-ratio condition proxy above `condition_limit` (or an exactly
// singular A) -> IllConditionedError. Used by the baselines' normal
// equations and the TDD coefficient map; not a general-purpose solver.
ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b,
                           double condition_limit = 1e12);

}  // namespace mimocal

#endif  // MIMOCAL_COMPLEX_MATRIX_HPP
