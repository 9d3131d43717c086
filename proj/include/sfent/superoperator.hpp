#pragma once

// Superoperators are N^2 x N^2 complex matrices acting on column-stacked
// N x N observables (see linalg.hpp for the vectorization convention).
// Includes the decomposition into Bohr-frequency blocks.

#include "sfent/linalg.hpp"
#include "sfent/model.hpp"

#include <map>
#include <stdexcept>
#include <vector>

namespace sfent {

struct Superoperator {
  Eigen::Index dim = 0;  // N (matrix is N^2 x N^2)
  Matrix matrix;

  static Superoperator zero(Eigen::Index n) {
    return {n, Matrix::Zero(n * n, n * n)};
  }

  static Superoperator identity(Eigen::Index n) {
    return {n, Matrix::Identity(n * n, n * n)};
  }

  Matrix apply(const Matrix& x) const {
    if (x.rows() != dim || x.cols() != dim)
      throw std::invalid_argument("Superoperator::apply: dimension mismatch");
    return unvectorize(matrix * vectorize(x), dim);
  }

  // Hilbert-Schmidt adjoint; with the tr(A^dagger B) pairing this is the
  // state-picture (Schroedinger) generator of a Heisenberg generator.
  Superoperator adjoint() const { return {dim, matrix.adjoint()}; }

  Superoperator& operator+=(const Superoperator& o) {
    if (o.dim != dim) throw std::invalid_argument("Superoperator sum: dimension mismatch");
    matrix += o.matrix;
    return *this;
  }

  friend Superoperator operator+(Superoperator a, const Superoperator& b) {
    a += b;
    return a;
  }

  friend Superoperator operator*(Complex c, Superoperator a) {
    a.matrix *= c;
    return a;
  }
};

// Index pairs (r, c) of the observable basis element |r><c| grouped by the
// Bohr frequency E_r - E_c, keyed by the clustered frequency value. Indices
// within a block are ordered by vectorized position c*N + r.
struct BohrBlock {
  double frequency = 0.0;
  std::vector<Eigen::Index> vec_indices;
  std::vector<std::pair<int, int>> level_pairs;  // (level index r, level index c)
};

inline std::vector<BohrBlock> bohr_blocks(const SmallSystem& system,
                                          double tol = kBohrTol) {
  const auto freqs = bohr_frequencies(system, tol);
  std::vector<BohrBlock> blocks(freqs.size());
  for (size_t i = 0; i < freqs.size(); ++i) blocks[i].frequency = freqs[i];
  const auto& en = system.energies();
  const Eigen::Index n = system.dim();
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) {
      const double f = en[r] - en[c];
      size_t best = 0;
      double bestd = std::abs(f - freqs[0]);
      for (size_t i = 1; i < freqs.size(); ++i)
        if (std::abs(f - freqs[i]) < bestd) {
          bestd = std::abs(f - freqs[i]);
          best = i;
        }
      blocks[best].vec_indices.push_back(c * n + r);
      blocks[best].level_pairs.push_back({static_cast<int>(r), static_cast<int>(c)});
    }
  return blocks;
}

struct BlockDecomposition {
  std::vector<BohrBlock> blocks;
  std::vector<Matrix> block_matrices;
  double leakage = 0.0;  // Frobenius norm of all off-block couplings
};

// Decompose a superoperator along the Bohr grading of the system (valid when
// the map commutes with [H_S, .]); leakage above tol is an error.
inline BlockDecomposition block_decompose(const Superoperator& op,
                                          const SmallSystem& system,
                                          double leak_tol = 1e-8) {
  if (op.dim != system.dim())
    throw std::invalid_argument("block_decompose: dimension mismatch");
  BlockDecomposition out;
  out.blocks = bohr_blocks(system);
  // transform to the eigenbasis of H_S: X -> U^dagger X U on observables
  const Matrix& u = system.eigenbasis();
  const Matrix to_eig = kron(u.transpose(), u.adjoint());    // vec(U^dag X U)
  const Matrix from_eig = kron(u.conjugate(), u);            // inverse
  const Matrix m = to_eig * op.matrix * from_eig;
  double off2 = 0.0;
  for (const auto& blk : out.blocks) {
    const auto& idx = blk.vec_indices;
    Matrix bm(idx.size(), idx.size());
    for (size_t i = 0; i < idx.size(); ++i)
      for (size_t j = 0; j < idx.size(); ++j) bm(i, j) = m(idx[i], idx[j]);
    out.block_matrices.push_back(std::move(bm));
  }
  // leakage: everything not covered by some block
  Matrix mask = Matrix::Zero(m.rows(), m.cols());
  for (const auto& blk : out.blocks)
    for (auto i : blk.vec_indices)
      for (auto j : blk.vec_indices) mask(i, j) = 1.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (mask(i, j) == 0.0) off2 += std::norm(m(i, j));
  out.leakage = std::sqrt(off2);
  if (out.leakage > leak_tol)
    throw std::runtime_error("not block diagonal: off-block leakage " +
                             std::to_string(out.leakage));
  return out;
}

}  // namespace sfent
