#include "mimocal/complex_matrix.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "mimocal/errors.hpp"

namespace mimocal {
namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

bool bit_equal(double a, double b) {
  std::uint64_t ua, ub;
  std::memcpy(&ua, &a, sizeof a);
  std::memcpy(&ub, &b, sizeof b);
  return ua == ub;
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols,
                             std::vector<cxd> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("ComplexMatrix: " + std::to_string(data_.size()) +
                     " entries cannot fill " + shape_str(rows_, cols_));
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

cxd& ComplexMatrix::at(std::size_t r, std::size_t c) {
  if (r >= rows_ || c >= cols_) {
    throw ShapeError("ComplexMatrix::at: (" + std::to_string(r) + "," +
                     std::to_string(c) + ") outside " + shape_str(rows_, cols_));
  }
  return (*this)(r, c);
}

const cxd& ComplexMatrix::at(std::size_t r, std::size_t c) const {
  return const_cast<ComplexMatrix*>(this)->at(r, c);
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

ComplexMatrix ComplexMatrix::conj_transpose() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

ComplexMatrix ComplexMatrix::row(std::size_t r) const {
  if (r >= rows_) {
    throw ShapeError("ComplexMatrix::row: row " + std::to_string(r) +
                     " outside " + shape_str(rows_, cols_));
  }
  ComplexMatrix out(1, cols_);
  for (std::size_t c = 0; c < cols_; ++c) out(0, c) = (*this)(r, c);
  return out;
}

ComplexMatrix ComplexMatrix::col(std::size_t c) const {
  if (c >= cols_) {
    throw ShapeError("ComplexMatrix::col: col " + std::to_string(c) +
                     " outside " + shape_str(rows_, cols_));
  }
  ComplexMatrix out(rows_, 1);
  for (std::size_t r = 0; r < rows_; ++r) out(r, 0) = (*this)(r, c);
  return out;
}

void ComplexMatrix::set_row(std::size_t r, const ComplexMatrix& v) {
  if (r >= rows_ || v.rows() != 1 || v.cols() != cols_) {
    throw ShapeError("ComplexMatrix::set_row: " +
                     shape_str(v.rows(), v.cols()) + " into row of " +
                     shape_str(rows_, cols_));
  }
  for (std::size_t c = 0; c < cols_; ++c) (*this)(r, c) = v(0, c);
}

void ComplexMatrix::set_col(std::size_t c, const ComplexMatrix& v) {
  if (c >= cols_ || v.cols() != 1 || v.rows() != rows_) {
    throw ShapeError("ComplexMatrix::set_col: " +
                     shape_str(v.rows(), v.cols()) + " into col of " +
                     shape_str(rows_, cols_));
  }
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v(r, 0);
}

bool ComplexMatrix::all_finite() const {
  for (const cxd& z : data_) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.data_.size(); ++i) {
    if (!bit_equal(a.data_[i].real(), b.data_[i].real()) ||
        !bit_equal(a.data_[i].imag(), b.data_[i].imag())) {
      return false;
    }
  }
  return true;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: a is " + shape_str(a.rows(), a.cols()) +
                     " but b is " + shape_str(b.rows(), b.cols()));
  }
  ComplexMatrix out(a.rows(), b.cols());
  // i-k-j order keeps the inner loop contiguous in both out and b.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cxd aik = a(i, k);
      if (aik == cxd{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

ComplexMatrix add(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: " + shape_str(a.rows(), a.cols()) + " vs " +
                     shape_str(b.rows(), b.cols()));
  }
  ComplexMatrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

ComplexMatrix sub(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("sub: " + shape_str(a.rows(), a.cols()) + " vs " +
                     shape_str(b.rows(), b.cols()));
  }
  ComplexMatrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

ComplexMatrix scale(const ComplexMatrix& a, cxd s) {
  ComplexMatrix out = a;
  for (cxd& z : out.data()) z *= s;
  return out;
}

double mse_between(const ComplexMatrix& a, const ComplexMatrix& b,
                   MseNorm norm) {
  if (!a.same_shape(b)) {
    throw ShapeError("mse_between: " + shape_str(a.rows(), a.cols()) + " vs " +
                     shape_str(b.rows(), b.cols()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const cxd d = a.data()[i] - b.data()[i];
    sum += std::norm(d);
  }
  if (norm == MseNorm::kMean && !a.data().empty()) {
    sum /= static_cast<double>(a.data().size());
  }
  return sum;
}

ComplexMatrix sample_complex_gaussian(Rng& rng, std::size_t rows,
                                      std::size_t cols, double variance) {
  if (variance < 0.0 || !std::isfinite(variance)) {
    throw std::invalid_argument("sample_complex_gaussian: variance must be "
                                "finite and nonnegative");
  }
  const double s = std::sqrt(variance);
  ComplexMatrix out(rows, cols);
  for (cxd& z : out.data()) z = s * rng.complex_gaussian_unit();
  return out;
}

ComplexMatrix random_unitary(Rng& rng, std::size_t m) {
  if (m == 0) throw std::invalid_argument("random_unitary: m must be >= 1");
  // Modified Gram-Schmidt on the columns of a CN(0,1) matrix. A fresh
  // Gaussian matrix is singular with probability zero; a vanishing column
  // norm would only arise from a broken stream.
  ComplexMatrix q = sample_complex_gaussian(rng, m, m, 1.0);
  for (std::size_t k = 0; k < m; ++k) {
    double nrm2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) nrm2 += std::norm(q(i, k));
    const double nrm = std::sqrt(nrm2);
    if (nrm < 1e-154) {
      throw IllConditionedError("random_unitary: dependent Gaussian columns");
    }
    for (std::size_t i = 0; i < m; ++i) q(i, k) /= nrm;
    for (std::size_t j = k + 1; j < m; ++j) {
      cxd proj = 0.0;
      for (std::size_t i = 0; i < m; ++i) proj += std::conj(q(i, k)) * q(i, j);
      for (std::size_t i = 0; i < m; ++i) q(i, j) -= proj * q(i, k);
    }
  }
  // MGS normalization leaves the R diagonal real and positive, which is the
  // phase convention that makes Q Haar distributed; no extra diagonal
  // correction is needed (it would multiply every column by 1).
  return q;
}

ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b,
                           double condition_limit) {
  if (a.rows() != a.cols()) {
    throw ShapeError("solve_linear: a is " + shape_str(a.rows(), a.cols()) +
                     ", expected square");
  }
  if (a.rows() != b.rows()) {
    throw ShapeError("solve_linear: a is " + shape_str(a.rows(), a.cols()) +
                     " but b is " + shape_str(b.rows(), b.cols()));
  }
  const std::size_t n = a.rows();
  ComplexMatrix lu = a;
  ComplexMatrix x = b;
  double pivot_max = 0.0;
  double pivot_min = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      const double mag = std::abs(lu(r, k));
      if (mag > best) {
        best = mag;
        piv = r;
      }
    }
    if (best == 0.0) {
      throw IllConditionedError("solve_linear: singular matrix (pivot " +
                                std::to_string(k) + " is zero)");
    }
    pivot_max = k == 0 ? best : std::max(pivot_max, best);
    pivot_min = k == 0 ? best : std::min(pivot_min, best);
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(k, c), lu(piv, c));
      for (std::size_t c = 0; c < x.cols(); ++c) std::swap(x(k, c), x(piv, c));
    }
    const cxd pivot = lu(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const cxd f = lu(r, k) / pivot;
      if (f == cxd{}) continue;
      lu(r, k) = f;
      for (std::size_t c = k + 1; c < n; ++c) lu(r, c) -= f * lu(k, c);
      for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) -= f * x(k, c);
    }
  }
  if (pivot_max / pivot_min > condition_limit) {
    throw IllConditionedError(
        "solve_linear: pivot ratio " + std::to_string(pivot_max / pivot_min) +
        " exceeds limit " + std::to_string(condition_limit));
  }
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t k = n; k-- > 0;) {
      cxd acc = x(k, c);
      for (std::size_t j = k + 1; j < n; ++j) acc -= lu(k, j) * x(j, c);
      x(k, c) = acc / lu(k, k);
    }
  }
  return x;
}

}  // namespace mimocal
