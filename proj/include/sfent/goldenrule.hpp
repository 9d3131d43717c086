#pragma once

// Golden-rule machinery: reservoir autocorrelation functions, transition
// rates c(u) and Lamb shifts s(u), the Davies generator of each reservoir,
// its entropic deformation K_alpha, and the level-shift operator.
//
// Conventions, pinned by the two-level golden tests:
//   C(t)  = (1/2) \int J(s) e^{its} / (1 + e^{-beta s}) ds
//   c(u)  = \int e^{-iut} C(t) dt          ( = pi J(u)/(1+e^{-beta u}) for one factor )
//   s(u)  = (1/2 pi) PV \int c(r)/(u - r) dr
//   K_j(X) = i[L_j, X]
//          + sum_{k,u} c_{j,k}(u) ( Q(u) X Q(u)^+ - 1/2 {Q(u) Q(u)^+, X} )
//   L_j    = sum_{k,u} s_{j,k}(u) Q(u) Q(u)^+
//   K_{alpha,j}(X) = K_j(X e^{alpha beta_j H_S}) e^{-alpha beta_j H_S}

#include "sfent/model.hpp"
#include "sfent/quadrature.hpp"
#include "sfent/superoperator.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

namespace sfent {

inline constexpr double kRateAbortTol = 1e-8;   // below -1e-8: abort
inline constexpr double kQuadTol = 1e-10;
inline constexpr double kTailTol = 1e-12;

// Thermal occupation factor 1/(1 + e^{-beta s}).
inline double thermal_weight(double beta, double s) {
  return 1.0 / (1.0 + std::exp(-beta * s));
}

// Autocorrelation of a single-factor channel at inverse temperature beta.
// Requires a symmetric density (real form factors).
inline Complex correlation_function(const SpectralDensity& density, double beta,
                                    double t, double tol = kQuadTol) {
  if (!density.symmetric())
    throw std::invalid_argument("correlation_function: density must be symmetric");
  const double r = density.truncation_radius(kTailTol);
  auto f = [&](double s) {
    return Complex(0.5 * density(s) * thermal_weight(beta, s)) *
           std::exp(Complex(0.0, t * s));
  };
  return integrate_piecewise<Complex>(f, -r, r, density.breakpoints(), tol);
}

inline Complex correlation_function(const CouplingChannel& channel, double beta,
                                    double t, double tol = kQuadTol) {
  if (channel.order() != 1)
    throw std::invalid_argument(
        "correlation_function: order-n channel, use product_correlation");
  return correlation_function(channel.densities.front(), beta, t, tol);
}

// Correlation of an order-n channel: the product of per-factor correlations.
inline Complex product_correlation(const CouplingChannel& channel, double beta,
                                   double t, double tol = kQuadTol) {
  Complex prod(1.0, 0.0);
  for (const auto& d : channel.densities) prod *= correlation_function(d, beta, t, tol);
  return prod;
}

// Fitted exponential envelope |C(t)| ~ amp * e^{-rate t} over [t_lo, t_hi].
struct CorrelationDecay {
  double amp = 0.0;
  double rate = 0.0;
  double fit_rms = 0.0;
};

template <typename F>
CorrelationDecay fit_correlation_decay(const F& corr, double t_lo, double t_hi,
                                       int npoints = 25) {
  std::vector<double> ts, ys;
  for (int i = 0; i < npoints; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / (npoints - 1);
    const double a = std::abs(corr(t));
    if (a <= 0) continue;
    ts.push_back(t);
    ys.push_back(std::log(a));
  }
  LineFit fit = fit_line(ts, ys);
  return {std::exp(fit.intercept), -fit.slope, fit.residual_rms};
}

// Golden-rule rate of a channel at frequency u. Single-factor channels use
// the closed form; order >= 2 falls back to a numerical Fourier transform of
// the product correlation over a window set by the fitted decay.
inline double rate(const CouplingChannel& channel, double beta, double u,
                   double tol = kQuadTol) {
  if (!std::isfinite(u)) throw std::invalid_argument("rate: u must be finite");
  double value;
  if (channel.order() == 1) {
    value = M_PI * channel.densities.front()(u) * thermal_weight(beta, u);
  } else {
    auto corr = [&](double t) { return product_correlation(channel, beta, t, tol); };
    const auto decay = fit_correlation_decay(corr, 1.0, 6.0);
    const double rate_floor = std::max(decay.rate, 0.05);
    const double T = std::log(std::max(decay.amp, 1.0) / 1e-10) / rate_floor;
    auto f = [&](double t) { return corr(t) * std::exp(Complex(0.0, -u * t)); };
    value = adaptive_simpson<Complex>(f, -T, T, tol, 52).real();
  }
  if (value < -kRateAbortTol)
    throw std::runtime_error("rate positivity violated at u=" + std::to_string(u));
  return std::max(value, 0.0);
}

// Lamb shift s(u) by principal-value subtraction over the decay window.
inline double lamb_shift(const CouplingChannel& channel, double beta, double u,
                         double tol = 1e-9) {
  double r = 0.0;
  for (const auto& d : channel.densities)
    r = std::max(r, d.truncation_radius(kTailTol));
  r = std::max(r, std::abs(u) + 10.0);
  auto c = [&](double x) { return rate(channel, beta, x); };
  std::vector<double> breaks;
  for (const auto& d : channel.densities)
    for (double b : d.breakpoints()) breaks.push_back(b);
  return principal_value(c, u, -r, r, tol, std::move(breaks)) / (2.0 * M_PI);
}

struct RateEntry {
  int reservoir = 0;
  int channel = 0;
  double frequency = 0.0;
  double c = 0.0;  // rate, >= 0
  double s = 0.0;  // Lamb shift
  double quad_error = 0.0;
};

struct RateTable {
  std::vector<RateEntry> entries;

  const RateEntry& lookup(int j, int k, double u, double tol = kBohrTol) const {
    for (const auto& e : entries)
      if (e.reservoir == j && e.channel == k && std::abs(e.frequency - u) <= tol)
        return e;
    throw std::runtime_error("rate table: no entry at frequency " + std::to_string(u));
  }
};

inline RateTable build_rate_table(const ModelSpec& model, double tol = kQuadTol) {
  RateTable table;
  const auto freqs = bohr_frequencies(model.system);
  for (size_t j = 0; j < model.reservoirs.size(); ++j) {
    const auto& res = model.reservoirs[j];
    for (size_t k = 0; k < res.channels.size(); ++k)
      for (double u : freqs) {
        RateEntry e;
        e.reservoir = static_cast<int>(j);
        e.channel = static_cast<int>(k);
        e.frequency = u;
        e.c = rate(res.channels[k], res.beta, u, tol);
        e.s = lamb_shift(res.channels[k], res.beta, u);
        e.quad_error = tol;
        table.entries.push_back(e);
      }
  }
  return table;
}

// Heisenberg-picture Davies generator of reservoir j.
inline Superoperator davies_generator(const ModelSpec& model, int j,
                                      const RateTable& table) {
  const auto& sys = model.system;
  const Eigen::Index n = sys.dim();
  const auto freqs = bohr_frequencies(sys);
  const auto& res = model.reservoirs.at(j);
  Superoperator k = Superoperator::zero(n);
  Matrix lamb = Matrix::Zero(n, n);
  const Matrix id = Matrix::Identity(n, n);
  for (size_t kk = 0; kk < res.channels.size(); ++kk) {
    const auto& ch = res.channels[kk];
    for (double u : freqs) {
      const auto& entry = table.lookup(j, static_cast<int>(kk), u);
      const Matrix q = jump_component(ch.coupling_op, sys, u);
      const Matrix qq = q * q.adjoint();
      // c(u) [ Q(u) X Q(u)^+ - 1/2 {Q(u)Q(u)^+, X} ]
      k.matrix += entry.c * (kron(q.conjugate(), q) -
                             0.5 * (kron(id, qq) + kron(qq.transpose(), id)));
      lamb += entry.s * qq;
    }
  }
  // i [Lambda, X]
  k.matrix += Complex(0, 1) * (kron(id, lamb) - kron(lamb.transpose(), id));
  return k;
}

inline Superoperator davies_generator(const ModelSpec& model, int j) {
  return davies_generator(model, j, build_rate_table(model));
}

// Deformed generator K_{alpha,j}(X) = K_j(X e^{alpha beta_j H_S}) e^{-alpha beta_j H_S};
// entire in alpha.
inline Matrix system_exponential(const SmallSystem& sys, Complex exponent) {
  Matrix d = Matrix::Zero(sys.dim(), sys.dim());
  for (Eigen::Index i = 0; i < sys.dim(); ++i)
    d(i, i) = std::exp(exponent * sys.energies()[i]);
  return sys.eigenbasis() * d * sys.eigenbasis().adjoint();
}

inline Superoperator deformed_generator(const ModelSpec& model, int j, Complex alpha,
                                        const Superoperator& davies_j) {
  const auto& sys = model.system;
  const double beta = model.reservoirs.at(j).beta;
  const Matrix g = system_exponential(sys, alpha * beta);
  const Matrix gi = system_exponential(sys, -alpha * beta);
  Superoperator out = davies_j;
  out.matrix = right_mult_superop(gi) * davies_j.matrix * right_mult_superop(g);
  return out;
}

inline Superoperator deformed_generator(const ModelSpec& model, int j, Complex alpha,
                                        const RateTable& table) {
  return deformed_generator(model, j, alpha, davies_generator(model, j, table));
}

// Full deformed generator K_alpha = sum_j K_{alpha,j}.
inline Superoperator deformed_generator_total(const ModelSpec& model, Complex alpha,
                                              const RateTable& table) {
  Superoperator out = Superoperator::zero(model.system.dim());
  for (size_t j = 0; j < model.reservoirs.size(); ++j)
    out += deformed_generator(model, static_cast<int>(j), alpha, table);
  return out;
}

// Level-shift operator -i K_{1/2 - alpha}.
inline Superoperator level_shift(const ModelSpec& model, Complex alpha,
                                 const RateTable& table) {
  Superoperator k = deformed_generator_total(model, Complex(0.5, 0.0) - alpha, table);
  return Complex(0, -1) * k;
}

inline Superoperator level_shift(const ModelSpec& model, Complex alpha) {
  return level_shift(model, alpha, build_rate_table(model));
}

// Population sub-generator in the system eigenbasis: entry (b, a) is
// <b| K(|a><a|) |b>. Off-diagonal entries are >= 0, rows of this matrix
// (columns of its adjoint) sum to zero for unital K.
inline RealMatrix population_generator(const Superoperator& k, const SmallSystem& sys) {
  const Eigen::Index n = sys.dim();
  RealMatrix pop(n, n);
  const Matrix& u = sys.eigenbasis();
  for (Eigen::Index a = 0; a < n; ++a) {
    const Matrix proj = u.col(a) * u.col(a).adjoint();
    const Matrix img = k.apply(proj);
    for (Eigen::Index b = 0; b < n; ++b)
      pop(b, a) = (u.col(b).adjoint() * img * u.col(b))(0, 0).real();
  }
  // note transposed storage: pop(b,a) multiplies the population x_a of
  // the observable; d x_b/dt = sum_a pop(b,a) x_a
  return pop;
}

}  // namespace sfent
