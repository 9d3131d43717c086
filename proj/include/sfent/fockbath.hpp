#pragma once

// Exact finite-dimensional realization of the open system: reservoirs are
// discretized into fermionic modes (midpoint grid, Jordan-Wigner sign strings
// spanning all modes), the joint Hamiltonian is diagonalized densely, and the
// finite-time entropic functionals and entropy-balance identities are
// evaluated from the cached eigendecomposition (exact in t, no integrator).
//
// Conventions:
//   U_t = e^{-itH},  rho_t = U_t rho0 U_t^+,  rho_{-t} = e^{itH} rho0 e^{-itH}
//   S = sum_j beta_j H_j (bath only),  sigma = -i lambda sum_j beta_j [H_j, V_j]
//   two-time functional  chi_t(alpha) = sum_{n,n'} e^{-alpha(s_{n'}-s_n)}
//       tr( P_{n'} U_t P_n rho0 P_n U_t^+ )  =  tr( rho0^{1-alpha} rho_{-t}^alpha )
//   cocycle  [D rho_{-t} : D rho0]_alpha = rho_{-t}^alpha rho0^{-alpha}
//
// Models whose Hamiltonian is real in the supplied basis take a real
// eigensolver/BLAS path; this matters at the largest sizes.

#include "sfent/functionals.hpp"
#include "sfent/model.hpp"

#include <bit>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sfent {

struct BathDiscretization {
  int n = 0;
  double s_max = 0.0;
  double step = 0.0;
  std::vector<double> energies;    // midpoint grid, ascending, > 0
  std::vector<double> amplitudes;  // g_i = sqrt(J(s_i) * step) >= 0
};

// Midpoint discretization of a density on [0, s_max]. The cutoff must lie
// beyond the density's effective support: J(s_max) <= 5% of the grid maximum.
inline BathDiscretization discretize(const SpectralDensity& density, int n,
                                     double s_max) {
  if (n < 1 || !(s_max > 0))
    throw std::invalid_argument("discretize: need n >= 1, s_max > 0");
  BathDiscretization d;
  d.n = n;
  d.s_max = s_max;
  d.step = s_max / n;
  double jmax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) * d.step;
    const double j = density(s);
    jmax = std::max(jmax, j);
    d.energies.push_back(s);
    d.amplitudes.push_back(std::sqrt(j * d.step));
  }
  if (density(s_max) > 0.05 * std::max(jmax, 1e-300))
    throw std::invalid_argument("density support exceeds cutoff s_max");
  return d;
}

// Discrete counterpart of correlation_function; converges to it as n grows.
inline Complex discrete_correlation(const BathDiscretization& d, double beta,
                                    double t) {
  Complex sum(0, 0);
  for (size_t i = 0; i < d.energies.size(); ++i) {
    const double s = d.energies[i];
    const double g2 = d.amplitudes[i] * d.amplitudes[i];
    const double occ = 1.0 / (1.0 + std::exp(beta * s));
    sum += 0.5 * g2 *
           (std::exp(Complex(0, t * s)) * (1.0 - occ) +
            std::exp(Complex(0, -t * s)) * occ);
  }
  return sum;
}

// Dense annihilation operator of mode p among nmodes (Jordan-Wigner): bit p
// of the basis index is the occupation of mode p, sign strings run over
// modes q < p.
inline Matrix fermion_annihilator(int nmodes, int p) {
  const Eigen::Index dim = Eigen::Index(1) << nmodes;
  Matrix a = Matrix::Zero(dim, dim);
  const std::uint64_t bit = 1ull << p;
  const std::uint64_t below = bit - 1;
  for (std::uint64_t x = 0; x < static_cast<std::uint64_t>(dim); ++x)
    if (x & bit) {
      const double sign = (std::popcount(x & below) % 2) ? -1.0 : 1.0;
      a(x & ~bit, x) = sign;
    }
  return a;
}

struct FockMode {
  int reservoir = 0;
  int channel = 0;
  int factor = 0;
  double energy = 0.0;
  double amplitude = 0.0;
};

struct FockOptions {
  int mode_limit = 14;
};

class FockSimulator {
 public:
  Eigen::Index system_dim = 0, bath_dim = 0, dim = 0;
  int num_modes = 0;
  std::vector<FockMode> modes;
  double recurrence_estimate = 0.0;
  bool real_basis = false;
  double lambda = 0.0;
  std::vector<double> betas;

  // caches (occupation basis, full index = s * bath_dim + x)
  RealVector energies;   // spectrum of H_total, ascending
  RealMatrix basis_real; // eigenvectors if real_basis
  Matrix basis_cplx;     // eigenvectors otherwise
  RealVector rho0_diag;
  RealVector log_rho0_diag;
  RealVector entropy_diag;  // S = sum_j beta_j H_j
  std::vector<RealVector> reservoir_energy_diag;

  // coupling bookkeeping, kept so sigma and field operators can be rebuilt
  std::vector<Matrix> coupling_ops;                 // flattened (j,k)
  std::vector<std::pair<int, int>> coupling_index;  // (reservoir, channel)
  std::vector<int> channel_orders;

  const Matrix& sigma() const {
    if (!sigma_) sigma_ = build_sigma();
    return *sigma_;
  }

  // W^H diag(d) W
  Matrix basis_sandwich(const Vector& d) const {
    if (real_basis) {
      RealMatrix re = basis_sandwich_real(d.real());
      if (d.imag().cwiseAbs().maxCoeff() == 0.0) return re.cast<Complex>();
      RealMatrix im = basis_sandwich_real(d.imag());
      return re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
    }
    return basis_cplx.adjoint() * (d.asDiagonal() * basis_cplx);
  }

  RealMatrix basis_sandwich_real(const RealVector& d) const {
    if (!real_basis) throw std::logic_error("basis_sandwich_real: complex basis");
    RealMatrix scaled = d.asDiagonal() * basis_real;
    return basis_real.transpose() * scaled;
  }

  // W^H A W
  Matrix to_eigenbasis(const Matrix& a) const {
    if (real_basis) {
      RealMatrix re = basis_real.transpose() * (a.real() * basis_real);
      RealMatrix im = basis_real.transpose() * (a.imag() * basis_real);
      return re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
    }
    return basis_cplx.adjoint() * a * basis_cplx;
  }

  Vector eigenphases(double t) const {  // z_q = e^{-i t E_q}
    Vector z(dim);
    for (Eigen::Index q = 0; q < dim; ++q)
      z[q] = std::exp(Complex(0, -t * energies[q]));
    return z;
  }

  // U_t = e^{-itH}
  Matrix propagator(double t) const {
    const Vector z = eigenphases(t);
    if (real_basis) {
      RealMatrix cre = basis_real * z.real().asDiagonal();
      RealMatrix cim = basis_real * z.imag().asDiagonal();
      RealMatrix re = cre * basis_real.transpose();
      RealMatrix im = cim * basis_real.transpose();
      return re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
    }
    return basis_cplx * z.asDiagonal() * basis_cplx.adjoint();
  }

  Vector rho0_power(Complex a) const {
    check_power(a.real());
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = std::exp(a * log_rho0_diag[i]);
    return v;
  }

  RealVector rho0_power_real(double a) const {
    check_power(a);
    RealVector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = std::exp(a * log_rho0_diag[i]);
    return v;
  }

  Matrix evolved_state(double t) const {  // rho_t
    const Matrix u = propagator(t);
    return u * rho0_diag.cast<Complex>().asDiagonal() * u.adjoint();
  }

  // Field operator phi(f) of one channel factor, dense on the bath space.
  Matrix field_operator(int reservoir, int channel, int factor) const {
    Matrix phi = Matrix::Zero(bath_dim, bath_dim);
    for (int p = 0; p < num_modes; ++p) {
      const auto& md = modes[p];
      if (md.reservoir == reservoir && md.channel == channel &&
          md.factor == factor && md.amplitude != 0.0) {
        const Matrix a = fermion_annihilator(num_modes, p);
        phi += md.amplitude / std::sqrt(2.0) * (a + a.adjoint());
      }
    }
    return phi;
  }

 private:
  void check_power(double re) const {
    if (std::abs(re) * std::abs(log_rho0_diag.minCoeff()) > 690.0)
      throw std::runtime_error("state effectively singular; reduce beta or bath size");
  }

  Matrix build_sigma() const {
    Matrix sigma = Matrix::Zero(dim, dim);
    for (size_t flat = 0; flat < coupling_ops.size(); ++flat) {
      const int j = coupling_index[flat].first;
      const int k = coupling_index[flat].second;
      const int ord = channel_orders[flat];
      Matrix r = field_operator(j, k, 0);
      for (int m = 1; m < ord; ++m) r = (r * field_operator(j, k, m)).eval();
      r *= std::pow(Complex(0, 1), (ord * (ord - 1) / 2) % 4);
      const Matrix v = kron(coupling_ops[flat], r);
      const double beta = betas[j];
      const RealVector& ej = reservoir_energy_diag[j];
      for (Eigen::Index b = 0; b < dim; ++b)
        for (Eigen::Index a = 0; a < dim; ++a)
          sigma(a, b) += Complex(0, -lambda) * beta * (ej[a] - ej[b]) * v(a, b);
    }
    return sigma;
  }

  mutable std::optional<Matrix> sigma_;
};

namespace detail {

// scatter lambda * Q (x) phi into a dense Hamiltonian (order-1 channels)
template <typename Mat, typename QMat>
void scatter_field_coupling(Mat& h, const QMat& q, double lambda,
                            const std::vector<int>& mode_ids,
                            const std::vector<double>& amps, Eigen::Index bath_dim) {
  const Eigen::Index nsys = q.rows();
  for (size_t i = 0; i < mode_ids.size(); ++i) {
    const int p = mode_ids[i];
    const double g = amps[i] / std::sqrt(2.0);
    if (g == 0.0) continue;
    const std::uint64_t bit = 1ull << p;
    const std::uint64_t below = bit - 1;
    for (std::uint64_t x = 0; x < static_cast<std::uint64_t>(bath_dim); ++x) {
      if (x & bit) continue;
      const std::uint64_t y = x | bit;
      const double val = lambda * g * ((std::popcount(x & below) % 2) ? -1.0 : 1.0);
      for (Eigen::Index s = 0; s < nsys; ++s)
        for (Eigen::Index sp = 0; sp < nsys; ++sp) {
          const auto qv = q(s, sp);
          if (qv == decltype(qv){}) continue;
          h(s * bath_dim + y, sp * bath_dim + x) += qv * val;
          h(s * bath_dim + x, sp * bath_dim + y) += qv * val;
        }
    }
  }
}

}  // namespace detail

// Build the simulator from per-factor discretizations listed in canonical
// order (reservoir-major, then channel, then factor; energies ascending
// within a factor).
inline FockSimulator build_simulator(const ModelSpec& model,
                                     const std::vector<BathDiscretization>& discs,
                                     const FockOptions& opts = {}) {
  FockSimulator sim;
  sim.lambda = model.lambda;
  sim.system_dim = model.system.dim();

  size_t disc_idx = 0;
  int mode_count = 0;
  double max_step = 0.0;
  std::vector<std::vector<int>> factor_mode_ids;  // flattened per (j,k,m)
  for (size_t j = 0; j < model.reservoirs.size(); ++j) {
    sim.betas.push_back(model.reservoirs[j].beta);
    for (size_t k = 0; k < model.reservoirs[j].channels.size(); ++k) {
      const auto& ch = model.reservoirs[j].channels[k];
      sim.coupling_ops.push_back(ch.coupling_op);
      sim.coupling_index.push_back({static_cast<int>(j), static_cast<int>(k)});
      sim.channel_orders.push_back(ch.order());
      for (int m = 0; m < ch.order(); ++m) {
        if (disc_idx >= discs.size())
          throw std::invalid_argument("build_simulator: not enough discretizations");
        const auto& d = discs[disc_idx++];
        max_step = std::max(max_step, d.step);
        std::vector<int> ids;
        for (int i = 0; i < d.n; ++i) {
          sim.modes.push_back({static_cast<int>(j), static_cast<int>(k), m,
                               d.energies[i], d.amplitudes[i]});
          ids.push_back(mode_count++);
        }
        factor_mode_ids.push_back(std::move(ids));
      }
    }
  }
  if (disc_idx != discs.size())
    throw std::invalid_argument("build_simulator: too many discretizations");
  sim.num_modes = mode_count;
  if (mode_count > opts.mode_limit) {
    const double gib = std::ldexp(static_cast<double>(model.system.dim()), mode_count);
    std::ostringstream msg;
    msg << "mode limit exceeded: " << mode_count << " modes > " << opts.mode_limit
        << " (dense matrices would need ~" << gib * gib * 16.0 / (1024.0 * 1024.0 * 1024.0)
        << " GiB each)";
    throw std::invalid_argument(msg.str());
  }
  bool any_higher_order = false;
  for (int ord : sim.channel_orders) any_higher_order = any_higher_order || ord > 1;
  if (any_higher_order && mode_count > 10)
    throw std::invalid_argument(
        "order >= 2 channels use dense field products; limited to 10 total modes");

  sim.bath_dim = Eigen::Index(1) << mode_count;
  sim.dim = sim.system_dim * sim.bath_dim;
  sim.recurrence_estimate =
      max_step > 0 ? 2.0 * M_PI / max_step : std::numeric_limits<double>::infinity();

  // diagonal bath data
  {
    std::vector<RealVector> eres(model.reservoirs.size(),
                                 RealVector::Zero(sim.bath_dim));
    for (int p = 0; p < mode_count; ++p) {
      const auto& md = sim.modes[p];
      const std::uint64_t bit = 1ull << p;
      for (std::uint64_t x = 0; x < static_cast<std::uint64_t>(sim.bath_dim); ++x)
        if (x & bit) eres[md.reservoir][x] += md.energy;
    }
    RealVector sdiag_b = RealVector::Zero(sim.bath_dim);
    for (size_t j = 0; j < model.reservoirs.size(); ++j)
      sdiag_b += model.reservoirs[j].beta * eres[j];
    double logz = 0.0;
    for (int p = 0; p < mode_count; ++p)
      logz += std::log1p(std::exp(-model.reservoirs[sim.modes[p].reservoir].beta *
                                  sim.modes[p].energy));
    sim.rho0_diag.resize(sim.dim);
    sim.log_rho0_diag.resize(sim.dim);
    sim.entropy_diag.resize(sim.dim);
    sim.reservoir_energy_diag.assign(model.reservoirs.size(), RealVector::Zero(sim.dim));
    const double logn = std::log(static_cast<double>(sim.system_dim));
    for (Eigen::Index s = 0; s < sim.system_dim; ++s)
      for (Eigen::Index x = 0; x < sim.bath_dim; ++x) {
        const Eigen::Index i = s * sim.bath_dim + x;
        sim.entropy_diag[i] = sdiag_b[x];
        sim.log_rho0_diag[i] = -sdiag_b[x] - logz - logn;
        sim.rho0_diag[i] = std::exp(sim.log_rho0_diag[i]);
        for (size_t j = 0; j < model.reservoirs.size(); ++j)
          sim.reservoir_energy_diag[j][i] = eres[j][x];
      }
  }

  bool real_ok = model.system.real_entries();
  for (const auto& q : sim.coupling_ops)
    real_ok = real_ok && q.imag().cwiseAbs().maxCoeff() <= kHermTol;
  for (int ord : sim.channel_orders) real_ok = real_ok && ord == 1;

  auto add_free_part = [&](auto& h) {
    for (Eigen::Index s = 0; s < sim.system_dim; ++s)
      for (Eigen::Index x = 0; x < sim.bath_dim; ++x) {
        const Eigen::Index i = s * sim.bath_dim + x;
        double bath = 0.0;
        for (size_t j = 0; j < model.reservoirs.size(); ++j)
          bath += sim.reservoir_energy_diag[j][i];
        h(i, i) += bath;
      }
  };

  if (real_ok) {
    sim.real_basis = true;
    RealMatrix h = RealMatrix::Zero(sim.dim, sim.dim);
    add_free_part(h);
    const RealMatrix hs = model.system.hamiltonian().real();
    for (Eigen::Index s = 0; s < sim.system_dim; ++s)
      for (Eigen::Index sp = 0; sp < sim.system_dim; ++sp)
        if (hs(s, sp) != 0.0)
          for (Eigen::Index x = 0; x < sim.bath_dim; ++x)
            h(s * sim.bath_dim + x, sp * sim.bath_dim + x) += hs(s, sp);
    size_t fm = 0;
    for (size_t flat = 0; flat < sim.coupling_ops.size(); ++flat) {
      const RealMatrix q = sim.coupling_ops[flat].real();
      std::vector<double> amps;
      for (int id : factor_mode_ids[fm]) amps.push_back(sim.modes[id].amplitude);
      detail::scatter_field_coupling(h, q, model.lambda, factor_mode_ids[fm], amps,
                                     sim.bath_dim);
      ++fm;
    }
    auto eig = symmetric_eig(std::move(h));
    sim.energies = std::move(eig.values);
    sim.basis_real = std::move(eig.vectors);
  } else {
    Matrix h = Matrix::Zero(sim.dim, sim.dim);
    add_free_part(h);
    const Matrix& hs = model.system.hamiltonian();
    for (Eigen::Index s = 0; s < sim.system_dim; ++s)
      for (Eigen::Index sp = 0; sp < sim.system_dim; ++sp)
        if (hs(s, sp) != Complex(0, 0))
          for (Eigen::Index x = 0; x < sim.bath_dim; ++x)
            h(s * sim.bath_dim + x, sp * sim.bath_dim + x) += hs(s, sp);
    size_t fm = 0;
    for (size_t flat = 0; flat < sim.coupling_ops.size(); ++flat) {
      const int ord = sim.channel_orders[flat];
      if (ord == 1) {
        std::vector<double> amps;
        for (int id : factor_mode_ids[fm]) amps.push_back(sim.modes[id].amplitude);
        detail::scatter_field_coupling(h, sim.coupling_ops[flat], model.lambda,
                                       factor_mode_ids[fm], amps, sim.bath_dim);
        fm += 1;
      } else {
        fm += ord;  // sigma-style dense product
        const int j = sim.coupling_index[flat].first;
        const int k = sim.coupling_index[flat].second;
        Matrix r = Matrix::Identity(sim.bath_dim, sim.bath_dim);
        // field_operator needs the fully built mode table; safe here
        for (int m = 0; m < ord; ++m) {
          Matrix phi = Matrix::Zero(sim.bath_dim, sim.bath_dim);
          for (int p = 0; p < sim.num_modes; ++p) {
            const auto& md = sim.modes[p];
            if (md.reservoir == j && md.channel == k && md.factor == m &&
                md.amplitude != 0.0) {
              const Matrix a = fermion_annihilator(sim.num_modes, p);
              phi += md.amplitude / std::sqrt(2.0) * (a + a.adjoint());
            }
          }
          r = (r * phi).eval();
        }
        r *= std::pow(Complex(0, 1), (ord * (ord - 1) / 2) % 4);
        h += model.lambda * kron(sim.coupling_ops[flat], r);
      }
    }
    auto eig = hermitian_eig(std::move(h));
    sim.energies = std::move(eig.values);
    sim.basis_cplx = std::move(eig.vectors);
  }

  if (std::abs(sim.rho0_diag.sum() - 1.0) > 1e-10)
    throw std::runtime_error("reference state normalization failed");
  return sim;
}

// Convenience: same mode count and cutoff for every factor.
inline FockSimulator build_simulator(const ModelSpec& model, int modes_per_factor,
                                     double s_max, const FockOptions& opts = {}) {
  std::vector<BathDiscretization> discs;
  for (const auto& r : model.reservoirs)
    for (const auto& ch : r.channels)
      for (const auto& d : ch.densities)
        discs.push_back(discretize(d, modes_per_factor, s_max));
  return build_simulator(model, discs, opts);
}

// ---- entropic functionals -------------------------------------------------

// chi_t(alpha) on a shared t grid; the two basis transforms are hoisted out
// of the t loop (this is the only evaluation path that scales to the largest
// simulators).
inline std::vector<Complex> two_time_series(const FockSimulator& sim,
                                            const std::vector<double>& ts,
                                            Complex alpha) {
  std::vector<Complex> out(ts.size());
  if (sim.real_basis && alpha.imag() == 0.0) {
    RealMatrix r1 = sim.basis_sandwich_real(sim.rho0_power_real(1.0 - alpha.real()));
    {
      const RealMatrix r2 = sim.basis_sandwich_real(sim.rho0_power_real(alpha.real()));
      r1 = r1.cwiseProduct(r2.transpose()).eval();
    }
    for (size_t i = 0; i < ts.size(); ++i) {
      Vector z(sim.dim);
      for (Eigen::Index q = 0; q < sim.dim; ++q)
        z[q] = std::exp(Complex(0, ts[i] * sim.energies[q]));
      const RealVector mre = r1 * z.real();
      const RealVector mim = r1 * z.imag();
      Complex acc(0, 0);
      for (Eigen::Index p = 0; p < sim.dim; ++p)
        acc += std::conj(z[p]) * Complex(mre[p], mim[p]);
      out[i] = acc;
    }
    return out;
  }
  Matrix m = sim.basis_sandwich(sim.rho0_power(1.0 - alpha));
  {
    const Matrix r2 = sim.basis_sandwich(sim.rho0_power(alpha));
    m = m.cwiseProduct(r2.transpose()).eval();
  }
  for (size_t i = 0; i < ts.size(); ++i) {
    Vector z(sim.dim);
    for (Eigen::Index q = 0; q < sim.dim; ++q)
      z[q] = std::exp(Complex(0, ts[i] * sim.energies[q]));
    out[i] = z.adjoint() * (m * z);
  }
  return out;
}

inline Complex two_time_mgf(const FockSimulator& sim, double t, Complex alpha) {
  return two_time_series(sim, {t}, alpha)[0];
}

// Measurement-theoretic double sum over the spectral projections of S; the
// defining formula, kept as the oracle for the trace route.
inline Complex two_time_mgf_measurement(const FockSimulator& sim, double t,
                                        Complex alpha) {
  std::vector<std::pair<double, int>> vals;
  for (Eigen::Index i = 0; i < sim.dim; ++i)
    vals.push_back({sim.entropy_diag[i], static_cast<int>(i)});
  std::sort(vals.begin(), vals.end());
  const double scale = 1.0 + std::abs(vals.back().first);
  const auto clusters = cluster_sorted(vals, 1e-10 * scale);
  std::vector<int> which(sim.dim);
  std::vector<double> svals(clusters.size());
  for (size_t c = 0; c < clusters.size(); ++c) {
    svals[c] = clusters[c].value;
    for (int i : clusters[c].members) which[i] = static_cast<int>(c);
  }
  const Matrix u = sim.propagator(t);
  // w(c', c) = sum_{x in c', y in c} |U(x,y)|^2 rho0(y)
  RealMatrix w = RealMatrix::Zero(clusters.size(), clusters.size());
  for (Eigen::Index y = 0; y < sim.dim; ++y)
    for (Eigen::Index x = 0; x < sim.dim; ++x)
      w(which[x], which[y]) += std::norm(u(x, y)) * sim.rho0_diag[y];
  Complex out(0, 0);
  for (size_t cp = 0; cp < clusters.size(); ++cp)
    for (size_t c = 0; c < clusters.size(); ++c)
      out += std::exp(-alpha * (svals[cp] - svals[c])) * w(cp, c);
  return out;
}

// Finite-dimensional Connes cocycle rho_{-t}^alpha rho0^{-alpha}.
inline Matrix cocycle(const FockSimulator& sim, double t, Complex alpha) {
  const Matrix u = sim.propagator(-t);  // e^{itH}
  const Matrix b = (u * sim.rho0_power(alpha).asDiagonal()) * u.adjoint();
  return b * sim.rho0_power(-alpha).asDiagonal();
}

// A state argument: either the reference state (diagonal) or a dense matrix.
struct FockState {
  bool diagonal = true;
  RealVector diag;
  Matrix dense;

  static FockState reference(const FockSimulator& sim) {
    FockState s;
    s.diag = sim.rho0_diag;
    return s;
  }

  static FockState from_matrix(const FockSimulator& sim, Matrix rho) {
    if (rho.rows() != sim.dim || rho.cols() != sim.dim)
      throw std::invalid_argument("state has wrong dimension");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-8 ||
        std::abs(rho.trace() - Complex(1, 0)) > 1e-8)
      throw std::invalid_argument("not a density matrix");
    if (rho.rows() <= 1024) {
      if (hermitian_eigenvalues(0.5 * (rho + rho.adjoint().eval())).minCoeff() < -1e-8)
        throw std::invalid_argument("not a density matrix");
    } else {
      for (Eigen::Index i = 0; i < rho.rows(); ++i)
        if (rho(i, i).real() < -1e-10)
          throw std::invalid_argument("not a density matrix");
    }
    FockState s;
    s.diagonal = false;
    s.dense = std::move(rho);
    return s;
  }

  static FockState evolved(const FockSimulator& sim, double t) {
    FockState s;
    s.diagonal = false;
    s.dense = sim.evolved_state(t);
    return s;
  }

  Complex expectation(const Matrix& a) const {
    if (diagonal) {
      Complex out(0, 0);
      for (Eigen::Index i = 0; i < a.rows(); ++i) out += diag[i] * a(i, i);
      return out;
    }
    return (dense * a).trace();
  }
};

inline Complex qpsc_functional(const FockSimulator& sim, const FockState& nu, double t,
                               Complex alpha) {
  return nu.expectation(cocycle(sim, t, alpha));
}

inline Complex east_functional(const FockSimulator& sim, const FockState& nu, double t,
                               Complex alpha) {
  const Matrix c2 = cocycle(sim, t, alpha / 2.0);
  const Matrix c1 =
      alpha.imag() == 0.0 ? c2 : cocycle(sim, t, std::conj(alpha) / 2.0);
  if (nu.diagonal) {
    Complex out(0, 0);
    for (Eigen::Index x = 0; x < sim.dim; ++x) {
      Complex acc(0, 0);
      for (Eigen::Index y = 0; y < sim.dim; ++y) acc += std::conj(c1(y, x)) * c2(y, x);
      out += nu.diag[x] * acc;
    }
    return out;
  }
  return (nu.dense * (c1.adjoint() * c2)).trace();
}

// Time-averaged modular diagnostic (1/R) int_0^R nu(varsigma^theta(cocycle)) dtheta;
// for diagonal nu the average is theta-independent.
inline Complex modular_averaged_qpsc(const FockSimulator& sim, const FockState& nu,
                                     double t, Complex alpha, double window,
                                     int steps = 64) {
  const Matrix c = cocycle(sim, t, alpha);
  if (nu.diagonal || window == 0.0) return nu.expectation(c);
  Complex acc(0, 0);
  for (int i = 0; i <= steps; ++i) {
    const double theta = window * i / steps;
    Vector ph(sim.dim);
    for (Eigen::Index q = 0; q < sim.dim; ++q)
      ph[q] = std::exp(Complex(0, theta * sim.log_rho0_diag[q]));
    const Matrix twisted = ph.asDiagonal() * c * ph.conjugate().asDiagonal();
    acc += nu.expectation(twisted) * ((i == 0 || i == steps) ? 0.5 : 1.0);
  }
  return acc / static_cast<double>(steps);
}

struct EntropyBalance {
  double lhs = 0.0;  // Ent(rho_t | rho0) = tr rho_t (log rho0 - log rho_t) <= 0
  double rhs = 0.0;  // - int_0^t tr(rho_s sigma) ds, composite Simpson
};

inline EntropyBalance entropy_balance(const FockSimulator& sim, double t,
                                      int quad_steps) {
  if (quad_steps < 16) throw std::invalid_argument("entropy_balance: quad_steps < 16");
  EntropyBalance out;
  {
    const Matrix u = sim.propagator(t);
    double tr_rt_log0 = 0.0, tr_r0_log0 = 0.0;
    for (Eigen::Index y = 0; y < sim.dim; ++y)
      tr_r0_log0 += sim.rho0_diag[y] * sim.log_rho0_diag[y];
    for (Eigen::Index y = 0; y < sim.dim; ++y)
      for (Eigen::Index x = 0; x < sim.dim; ++x)
        tr_rt_log0 += std::norm(u(x, y)) * sim.rho0_diag[y] * sim.log_rho0_diag[x];
    out.lhs = tr_rt_log0 - tr_r0_log0;  // tr rho_t log rho0 - tr rho_t log rho_t
  }
  const Matrix sig_e = sim.to_eigenbasis(sim.sigma());
  const Matrix rho_e = sim.basis_sandwich(sim.rho0_diag.cast<Complex>());
  const Matrix prod = rho_e.cwiseProduct(sig_e.transpose());
  auto integrand = [&](double s) {
    Vector z(sim.dim);
    for (Eigen::Index q = 0; q < sim.dim; ++q)
      z[q] = std::exp(Complex(0, s * sim.energies[q]));
    return (z.adjoint() * (prod * z))(0, 0).real();
  };
  out.rhs = -simpson_composite<double>(integrand, 0.0, t, quad_steps);
  return out;
}

struct CocycleGeneratorCheck {
  double residual = 0.0;
  int sign = +1;  // orientation minimizing the residual
};

// Frobenius residual of  log rho_t - log rho0 = int_0^t U_s sigma U_s^+ ds,
// quadrature by composite Simpson in the eigenbasis; both orientations are
// tried and the better one recorded.
inline CocycleGeneratorCheck cocycle_generator_check(const FockSimulator& sim,
                                                     double t, int quad_steps) {
  if (quad_steps % 2) ++quad_steps;
  CocycleGeneratorCheck out;
  const Matrix lt = sim.basis_sandwich(sim.log_rho0_diag.cast<Complex>());
  const Matrix sig_e = sim.to_eigenbasis(sim.sigma());
  Matrix psi = Matrix::Zero(sim.dim, sim.dim);
  const double h = t / quad_steps;
  for (int k = 0; k <= quad_steps; ++k) {
    const double w = (k == 0 || k == quad_steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    const Vector z = sim.eigenphases(k * h);  // e^{-i s E}
    psi.noalias() += (w * h / 3.0) * (z * z.adjoint());
  }
  Matrix lhs(sim.dim, sim.dim);
  for (Eigen::Index p = 0; p < sim.dim; ++p)
    for (Eigen::Index q = 0; q < sim.dim; ++q)
      lhs(p, q) =
          (std::exp(Complex(0, -t * (sim.energies[p] - sim.energies[q]))) - 1.0) *
          lt(p, q);
  const Matrix rhs = sig_e.cwiseProduct(psi);
  const double rp = (lhs - rhs).norm();
  const double rm = (lhs + rhs).norm();
  out.residual = std::min(rp, rm);
  out.sign = rp <= rm ? +1 : -1;
  return out;
}

// Measurement double-sum with a precomputed propagator; the cluster weight
// matrix w(c', c) depends on t only, so grids reuse it across alpha.
struct MeasurementWeights {
  std::vector<double> svals;
  RealMatrix w;
};

inline MeasurementWeights measurement_weights(const FockSimulator& sim,
                                              const Matrix& u_t) {
  std::vector<std::pair<double, int>> vals;
  for (Eigen::Index i = 0; i < sim.dim; ++i)
    vals.push_back({sim.entropy_diag[i], static_cast<int>(i)});
  std::sort(vals.begin(), vals.end());
  const double scale = 1.0 + std::abs(vals.back().first);
  const auto clusters = cluster_sorted(vals, 1e-10 * scale);
  std::vector<int> which(sim.dim);
  MeasurementWeights mw;
  mw.svals.resize(clusters.size());
  for (size_t c = 0; c < clusters.size(); ++c) {
    mw.svals[c] = clusters[c].value;
    for (int i : clusters[c].members) which[i] = static_cast<int>(c);
  }
  mw.w = RealMatrix::Zero(clusters.size(), clusters.size());
  for (Eigen::Index y = 0; y < sim.dim; ++y)
    for (Eigen::Index x = 0; x < sim.dim; ++x)
      mw.w(which[x], which[y]) += std::norm(u_t(x, y)) * sim.rho0_diag[y];
  return mw;
}

inline Complex measurement_sum(const MeasurementWeights& mw, Complex alpha) {
  Complex out(0, 0);
  for (size_t cp = 0; cp < mw.svals.size(); ++cp)
    for (size_t c = 0; c < mw.svals.size(); ++c)
      out += std::exp(-alpha * (mw.svals[cp] - mw.svals[c])) * mw.w(cp, c);
  return out;
}

// All three entropic functionals at nu = omega over a (t, alpha) grid, plus
// the brute-force measurement values. Shares the propagator across alpha and
// uses half-power factorizations for the cocycle routes.
struct FunctionalGrid {
  std::vector<double> t;
  std::vector<Complex> alpha;
  std::vector<std::vector<Complex>> two_time;     // trace route, [alpha][t]
  std::vector<std::vector<Complex>> measurement;  // defining double sum
  std::vector<std::vector<Complex>> east;
  std::vector<std::vector<Complex>> qpsc;
  double triple_residual = 0.0;       // max |2tm-east|, |2tm-qpsc|
  double route_residual = 0.0;        // max |2tm trace - measurement|
};

inline FunctionalGrid functional_grid(const FockSimulator& sim,
                                      const std::vector<double>& ts,
                                      const std::vector<Complex>& alphas,
                                      bool with_measurement = true) {
  FunctionalGrid g;
  g.t = ts;
  g.alpha = alphas;
  const size_t na = alphas.size(), nt = ts.size();
  g.two_time.assign(na, std::vector<Complex>(nt));
  g.measurement.assign(na, std::vector<Complex>(nt));
  g.east.assign(na, std::vector<Complex>(nt));
  g.qpsc.assign(na, std::vector<Complex>(nt));
  for (size_t ai = 0; ai < na; ++ai)
    g.two_time[ai] = two_time_series(sim, ts, alphas[ai]);

  for (size_t ti = 0; ti < nt; ++ti) {
    const Matrix u_mt = sim.propagator(-ts[ti]);  // e^{itH}
    std::optional<MeasurementWeights> mw;
    if (with_measurement) mw = measurement_weights(sim, u_mt.adjoint());
    for (size_t ai = 0; ai < na; ++ai) {
      const Complex a = alphas[ai];
      if (with_measurement) g.measurement[ai][ti] = measurement_sum(*mw, a);
      if (a.imag() == 0.0) {
        // qpsc: diag of rho_{-t}^a are row norms of u_mt rho0^{a/2}
        const Matrix za = u_mt * sim.rho0_power(a / 2.0).asDiagonal();
        const Vector ra = sim.rho0_power(-a);
        Complex q(0, 0);
        for (Eigen::Index x = 0; x < sim.dim; ++x)
          q += sim.rho0_diag[x] * za.row(x).squaredNorm() * ra[x];
        g.qpsc[ai][ti] = q;
        // east: rho_{-t}^{a/2} = Z Z^+ with Z = u_mt rho0^{a/4}
        const Matrix z2 = u_mt * sim.rho0_power(a / 4.0).asDiagonal();
        const Matrix p = z2 * z2.adjoint();
        Complex e(0, 0);
        for (Eigen::Index x = 0; x < sim.dim; ++x)
          e += sim.rho0_diag[x] * ra[x].real() * p.col(x).squaredNorm();
        g.east[ai][ti] = e;
      } else {
        const FockState omega = FockState::reference(sim);
        g.qpsc[ai][ti] = qpsc_functional(sim, omega, ts[ti], a);
        g.east[ai][ti] = east_functional(sim, omega, ts[ti], a);
      }
      g.triple_residual = std::max(
          {g.triple_residual, std::abs(g.two_time[ai][ti] - g.east[ai][ti]),
           std::abs(g.two_time[ai][ti] - g.qpsc[ai][ti])});
      if (with_measurement)
        g.route_residual = std::max(
            g.route_residual, std::abs(g.two_time[ai][ti] - g.measurement[ai][ti]));
    }
  }
  return g;
}

struct GrowthComparison {
  double slope = 0.0;
  double prediction = 0.0;
  double rel_err = 0.0;
  bool beyond_recurrence = false;
};

// Least-squares slope of log chi_t(alpha) over the window against the
// second-order prediction lambda^2 F2(alpha).
inline GrowthComparison growth_rate_comparison(const FockSimulator& sim,
                                               const ModelSpec& model, double alpha,
                                               const std::vector<double>& t_window,
                                               const RateTable& table) {
  if (t_window.size() < 2)
    throw std::invalid_argument("growth_rate_comparison: need >= 2 times");
  GrowthComparison out;
  out.beyond_recurrence = t_window.back() > sim.recurrence_estimate;
  const auto vals = two_time_series(sim, t_window, alpha);
  std::vector<double> ys;
  for (const auto& v : vals) ys.push_back(std::log(std::abs(v)));
  out.slope = fit_line(t_window, ys).slope;
  out.prediction = model.lambda * model.lambda * pressure(model, alpha, table).value;
  out.rel_err = std::abs(out.slope - out.prediction) /
                std::max(std::abs(out.prediction), 1e-300);
  return out;
}

}  // namespace sfent
