#pragma once

// Model specification types: an N-level system, reservoirs at inverse
// temperatures beta_j, and Hermitian coupling channels with per-factor
// spectral densities. All types are immutable value objects once built.

#include "sfent/linalg.hpp"
#include "sfent/spectral_density.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sfent {

inline constexpr double kBohrTol = 1e-9;

class SmallSystem {
 public:
  explicit SmallSystem(Matrix hamiltonian) : h_(std::move(hamiltonian)) {
    if (h_.rows() != h_.cols() || h_.rows() < 1)
      throw std::invalid_argument("system Hamiltonian must be square and nonempty");
    if (!is_hermitian(h_))
      throw std::invalid_argument("system Hamiltonian is not Hermitian (1e-12)");
    auto eig = hermitian_eig(h_);
    energies_ = eig.values;
    basis_ = eig.vectors;
    // group numerically coincident eigenvalues into one projector each
    std::vector<std::pair<double, int>> sorted;
    for (int i = 0; i < energies_.size(); ++i) sorted.push_back({energies_[i], i});
    for (const auto& c : cluster_sorted(sorted, kBohrTol)) {
      Matrix p = Matrix::Zero(dim(), dim());
      for (int i : c.members) p += basis_.col(i) * basis_.col(i).adjoint();
      levels_.push_back(c.value);
      projectors_.push_back(std::move(p));
    }
  }

  Eigen::Index dim() const { return h_.rows(); }
  const Matrix& hamiltonian() const { return h_; }
  const RealVector& energies() const { return energies_; }  // ascending, with multiplicity
  const Matrix& eigenbasis() const { return basis_; }
  const std::vector<double>& levels() const { return levels_; }  // distinct, ascending
  const Matrix& projector(size_t a) const { return projectors_.at(a); }
  size_t num_levels() const { return levels_.size(); }

  bool real_entries(double tol = kHermTol) const {
    return h_.imag().cwiseAbs().maxCoeff() <= tol;
  }

 private:
  Matrix h_;
  RealVector energies_;
  Matrix basis_;
  std::vector<double> levels_;
  std::vector<Matrix> projectors_;
};

struct CouplingChannel {
  Matrix coupling_op;                     // Hermitian Q
  std::vector<SpectralDensity> densities; // one per field factor

  CouplingChannel(Matrix q, std::vector<SpectralDensity> dens)
      : coupling_op(std::move(q)), densities(std::move(dens)) {
    if (!is_hermitian(coupling_op))
      throw std::invalid_argument("coupling operator is not Hermitian (1e-12)");
    if (densities.empty())
      throw std::invalid_argument("channel needs at least one spectral density");
  }

  int order() const { return static_cast<int>(densities.size()); }
};

struct ReservoirSpec {
  double beta = 1.0;
  std::vector<CouplingChannel> channels;

  ReservoirSpec(double b, std::vector<CouplingChannel> ch)
      : beta(b), channels(std::move(ch)) {
    if (!(beta > 0.0)) throw std::invalid_argument("reservoir beta must be > 0");
    if (channels.empty()) throw std::invalid_argument("reservoir needs >= 1 channel");
  }
};

struct ModelSpec {
  SmallSystem system;
  std::vector<ReservoirSpec> reservoirs;
  double lambda = 0.0;

  ModelSpec(SmallSystem sys, std::vector<ReservoirSpec> res, double lam)
      : system(std::move(sys)), reservoirs(std::move(res)), lambda(lam) {
    if (reservoirs.empty()) throw std::invalid_argument("model needs >= 1 reservoir");
    for (const auto& r : reservoirs)
      for (const auto& ch : r.channels)
        if (ch.coupling_op.rows() != system.dim())
          throw std::invalid_argument("channel dimension does not match system");
  }

  size_t num_reservoirs() const { return reservoirs.size(); }

  bool equal_temperatures() const {
    double lo = reservoirs.front().beta, hi = lo;
    for (const auto& r : reservoirs) {
      lo = std::min(lo, r.beta);
      hi = std::max(hi, r.beta);
    }
    return hi - lo < 1e-12;
  }

  // Time-reversal invariance in the supplied basis: real H_S, real
  // i^{n(n-1)/2} Q and symmetric densities.
  bool time_reversal_invariant() const {
    if (!system.real_entries()) return false;
    for (const auto& r : reservoirs)
      for (const auto& ch : r.channels) {
        const int n = ch.order();
        const Complex phase = std::pow(Complex(0, 1), (n * (n - 1)) / 2 % 4);
        if (((phase * ch.coupling_op).imag().cwiseAbs().maxCoeff()) > kHermTol) return false;
        for (const auto& d : ch.densities)
          if (!d.symmetric()) return false;
      }
    return true;
  }
};

// All distinct differences E' - E of system eigenvalues, clustered with
// absolute tolerance tol; contains 0 and is closed under negation.
inline std::vector<double> bohr_frequencies(const SmallSystem& system,
                                            double tol = kBohrTol) {
  if (!(tol > 0)) throw std::invalid_argument("bohr_frequencies: tol must be > 0");
  std::vector<std::pair<double, int>> diffs;
  const auto& lv = system.levels();
  int k = 0;
  for (double a : lv)
    for (double b : lv) {
      double d = a - b;
      if (d > tol / 2) diffs.push_back({d, k++});
    }
  std::sort(diffs.begin(), diffs.end());
  std::vector<double> out{0.0};
  for (const auto& c : cluster_sorted(diffs, tol)) out.push_back(c.value);
  // mirror the positive half so the set is exactly negation-symmetric
  const size_t npos = out.size();
  for (size_t i = 1; i < npos; ++i) out.push_back(-out[i]);
  std::sort(out.begin(), out.end());
  return out;
}

// Fourier component of Q at Bohr frequency u:
//   Q(u) = sum_{E' - E = u} P_{E'} Q P_E,
// so that Q(u)^dagger = Q(-u) and sum_u Q(u) = Q.
inline Matrix jump_component(const Matrix& q, const SmallSystem& system, double u,
                             double tol = kBohrTol) {
  Matrix out = Matrix::Zero(system.dim(), system.dim());
  bool resonant = false;
  const auto& lv = system.levels();
  for (size_t a = 0; a < lv.size(); ++a)
    for (size_t b = 0; b < lv.size(); ++b)
      if (std::abs((lv[a] - lv[b]) - u) <= tol) {
        out += system.projector(a) * q * system.projector(b);
        resonant = true;
      }
  if (!resonant)
    throw std::invalid_argument("no resonant transition at frequency " + std::to_string(u));
  return out;
}

}  // namespace sfent
