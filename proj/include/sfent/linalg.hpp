#pragma once

// Dense linear-algebra helpers shared across the library: complex matrix
// aliases, column-stacking vectorization, Kronecker products and LAPACK-backed
// Hermitian eigensolvers (Eigen's iterative path is too slow at Fock-space
// sizes).

#include <Eigen/Dense>
#include <lapacke.h>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfent {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermTol = 1e-12;

inline bool is_hermitian(const Matrix& a, double tol = kHermTol) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// Column-stacking vectorization: entry (r,c) of an NxN matrix maps to
// component c*N + r. This convention is fixed library-wide; every
// superoperator matrix acts on vectors produced here.
inline Vector vectorize(const Matrix& x) {
  return Eigen::Map<const Vector>(x.data(), x.size());
}

inline Matrix unvectorize(const Vector& v, Eigen::Index n) {
  if (v.size() != n * n) throw std::invalid_argument("unvectorize: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// vec(A X B) = (B^T (x) A) vec(X) under column stacking.
inline Matrix left_mult_superop(const Matrix& a) {
  Eigen::Index n = a.rows();
  return kron(Matrix::Identity(n, n), a);
}

inline Matrix right_mult_superop(const Matrix& b) {
  Eigen::Index n = b.rows();
  return kron(b.transpose(), Matrix::Identity(n, n));
}

struct HermitianEig {
  RealVector values;  // ascending
  Matrix vectors;     // columns
};

// LAPACK zheevd; input must be Hermitian.
inline HermitianEig hermitian_eig(Matrix a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("hermitian_eig: not square");
  HermitianEig out;
  out.values.resize(n);
  lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'V', 'L', n,
      reinterpret_cast<lapack_complex_double*>(a.data()), n, out.values.data());
  if (info != 0)
    throw std::runtime_error("hermitian_eig: zheevd failed, info=" + std::to_string(info));
  out.vectors = std::move(a);
  return out;
}

struct SymmetricEig {
  RealVector values;
  RealMatrix vectors;
};

inline SymmetricEig symmetric_eig(RealMatrix a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("symmetric_eig: not square");
  SymmetricEig out;
  out.values.resize(n);
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n,
                                   out.values.data());
  if (info != 0)
    throw std::runtime_error("symmetric_eig: dsyevd failed, info=" + std::to_string(info));
  out.vectors = std::move(a);
  return out;
}

// Eigenvalues of a Hermitian matrix only (no vectors).
inline RealVector hermitian_eigenvalues(Matrix a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  RealVector w(n);
  lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'N', 'L', n,
      reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
  if (info != 0)
    throw std::runtime_error("hermitian_eigenvalues: zheevd failed");
  return w;
}

// Cluster sorted values whose neighbours are closer than tol; returns one
// representative (mean) per cluster together with member indices.
struct Cluster {
  double value = 0.0;
  std::vector<int> members;
};

inline std::vector<Cluster> cluster_sorted(const std::vector<std::pair<double, int>>& sorted,
                                           double tol) {
  std::vector<Cluster> clusters;
  double last = 0.0;
  for (const auto& [v, idx] : sorted) {
    if (clusters.empty() || v - last > tol) {
      clusters.push_back({v, {idx}});
    } else {
      auto& c = clusters.back();
      c.members.push_back(idx);
      c.value += (v - c.value) / static_cast<double>(c.members.size());
    }
    last = v;
  }
  return clusters;
}

}  // namespace sfent
