#pragma once

// Entropic pressure and fluctuation diagnostics at second order in the
// coupling: the pressure F2(alpha) is the leading-real-part eigenvalue of the
// deformed generator K_alpha; sampled curves feed a Legendre-Fenchel engine
// producing the large-deviation rate function, and steady-state entropy
// production is computed along two independent routes (flux vs slope).

#include "sfent/goldenrule.hpp"
#include "sfent/threading.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sfent {

struct PressurePoint {
  double value = 0.0;   // F2(alpha)
  double gap = 0.0;     // distance of leading real part to the next one
  Matrix right;         // X_alpha, tr X real positive
  Matrix left;          // Y_alpha, <Y, X>_HS = 1
};

namespace detail {

struct SpectralData {
  std::vector<Complex> eigenvalues;
  Matrix right_vectors;
  Matrix left_rows;  // rows are HS-duals of right eigenvectors
};

inline SpectralData eigensystem(const Matrix& m) {
  Eigen::ComplexEigenSolver<Matrix> solver(m, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed on superoperator");
  SpectralData out;
  out.right_vectors = solver.eigenvectors();
  out.left_rows = out.right_vectors.inverse();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.eigenvalues.push_back(solver.eigenvalues()(i));
  return out;
}

}  // namespace detail

// Leading eigenvalue (maximal real part) of K_alpha with simplicity and
// reality checks. The imaginary part must vanish for real alpha.
inline PressurePoint pressure(const ModelSpec& model, double alpha,
                              const RateTable& table) {
  const Superoperator k = deformed_generator_total(model, alpha, table);
  const auto spec = detail::eigensystem(k.matrix);
  size_t lead = 0;
  for (size_t i = 1; i < spec.eigenvalues.size(); ++i)
    if (spec.eigenvalues[i].real() > spec.eigenvalues[lead].real()) lead = i;
  double gap = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < spec.eigenvalues.size(); ++i)
    if (i != lead)
      gap = std::min(gap, spec.eigenvalues[lead].real() - spec.eigenvalues[i].real());
  const double scale = k.matrix.norm();
  if (gap < 1e-8 * scale)
    throw std::runtime_error("gap collapse: leading eigenvalue not simple");
  const Complex ev = spec.eigenvalues[lead];
  if (std::abs(ev.imag()) > 1e-9)
    throw std::runtime_error("spectral anomaly: leading eigenvalue not real");

  PressurePoint out;
  out.value = ev.real();
  out.gap = gap;
  const Eigen::Index n = model.system.dim();
  Vector x = spec.right_vectors.col(lead);
  Vector y = spec.left_rows.row(lead).conjugate();  // <y, x> = 1 by construction
  // rotate so tr X is real positive
  const Complex trx = unvectorize(x, n).trace();
  if (std::abs(trx) > 0) {
    const Complex phase = trx / std::abs(trx);
    x /= phase;
    y *= std::conj(phase);
  }
  out.right = unvectorize(x, n);
  out.left = unvectorize(y, n);
  return out;
}

inline PressurePoint pressure(const ModelSpec& model, double alpha) {
  return pressure(model, alpha, build_rate_table(model));
}

struct PressureCurve {
  std::vector<double> alphas;
  std::vector<double> values;       // F2
  std::vector<double> gaps;
  std::vector<double> derivatives;  // dF2/dalpha
  double value_at_zero = 0.0;
  double value_at_one = 0.0;
  double symmetry_residual = 0.0;   // max |F2(a) - F2(1-a)|, TRI models only
  bool tri = false;
  double theta = 0.0;

  double min_second_difference() const {
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i + 1 < values.size(); ++i)
      m = std::min(m, values[i + 1] - 2.0 * values[i] + values[i - 1]);
    return m;
  }
};

inline double pressure_derivative(const ModelSpec& model, const RateTable& table,
                                  double alpha) {
  const double h = 1e-5 * (1.0 + std::abs(alpha));
  return derivative(
      [&](double a) { return pressure(model, a, table).value; }, alpha, h);
}

// Sample F2 on a uniform grid over [-theta, 1 + theta]. Grid points are
// independent; evaluation may be parallel, results land in grid order.
inline PressureCurve pressure_curve(const ModelSpec& model, double theta, int npoints,
                                    const RateTable& table, int threads = 1) {
  if (!(theta > 0.0) || npoints < 3)
    throw std::invalid_argument("pressure_curve: need theta > 0 and npoints >= 3");
  PressureCurve curve;
  curve.theta = theta;
  curve.tri = model.time_reversal_invariant();
  curve.alphas.resize(npoints);
  curve.values.resize(npoints);
  curve.gaps.resize(npoints);
  curve.derivatives.resize(npoints);
  parallel_for(static_cast<size_t>(npoints), threads, [&](size_t i) {
    const double a = -theta + (1.0 + 2.0 * theta) * static_cast<double>(i) / (npoints - 1);
    const auto p = pressure(model, a, table);
    curve.alphas[i] = a;
    curve.values[i] = p.value;
    curve.gaps[i] = p.gap;
    curve.derivatives[i] = pressure_derivative(model, table, a);
  });
  curve.value_at_zero = pressure(model, 0.0, table).value;
  curve.value_at_one = pressure(model, 1.0, table).value;
  if (std::abs(curve.value_at_zero) > 1e-9 || std::abs(curve.value_at_one) > 1e-9)
    throw std::runtime_error("pressure curve fails F2(0) = F2(1) = 0");
  if (curve.min_second_difference() < -1e-8)
    throw std::runtime_error("pressure curve not convex");
  if (curve.tri) {
    double res = 0.0;
    for (size_t i = 0; i < curve.alphas.size(); ++i) {
      const size_t j = curve.alphas.size() - 1 - i;  // alpha -> 1 - alpha on this grid
      res = std::max(res, std::abs(curve.values[i] - curve.values[j]));
    }
    curve.symmetry_residual = res;
  }
  return curve;
}

// Unique stationary state of the full Davies generator (kernel of the
// state-picture adjoint), strictly positive under the golden-rule condition.
inline Matrix steady_state(const ModelSpec& model, const RateTable& table) {
  const Eigen::Index n = model.system.dim();
  Superoperator k = Superoperator::zero(n);
  for (size_t j = 0; j < model.reservoirs.size(); ++j)
    k += davies_generator(model, static_cast<int>(j), table);
  const Matrix adj = k.matrix.adjoint();
  const auto spec = detail::eigensystem(adj);
  const double scale = std::max(adj.norm(), 1.0);
  std::optional<size_t> kernel;
  int kernel_dim = 0;
  for (size_t i = 0; i < spec.eigenvalues.size(); ++i)
    if (std::abs(spec.eigenvalues[i]) < 1e-10 * scale) {
      ++kernel_dim;
      kernel = i;
    }
  if (kernel_dim != 1)
    throw std::runtime_error("ergodicity failure: kernel dimension " +
                             std::to_string(kernel_dim));
  Matrix rho = unvectorize(spec.right_vectors.col(*kernel), n);
  rho = 0.5 * (rho + rho.adjoint().eval());
  rho /= rho.trace().real();
  const RealVector evs = hermitian_eigenvalues(rho);
  if (evs.minCoeff() < -1e-12)
    throw std::runtime_error("steady state not positive semidefinite");
  return rho;
}

inline Matrix steady_state(const ModelSpec& model) {
  return steady_state(model, build_rate_table(model));
}

struct EntropyProduction {
  double ep_flux = 0.0;   // sum_j beta_j tr(rho_+ K_j(-H_S))
  double ep_slope = 0.0;  // -dF2/dalpha at 0
};

// Two routes to the mean entropy production rate (per rescaled time, i.e.
// divided by lambda^2); they must agree within 1e-6 relative.
inline EntropyProduction entropy_production(const ModelSpec& model,
                                            const RateTable& table) {
  EntropyProduction out;
  const Matrix rho = steady_state(model, table);
  double flux = 0.0;
  for (size_t j = 0; j < model.reservoirs.size(); ++j) {
    const Superoperator kj = davies_generator(model, static_cast<int>(j), table);
    // energy current into reservoir j is -tr(rho K_j(H_S))
    flux -= model.reservoirs[j].beta *
            (rho * kj.apply(model.system.hamiltonian())).trace().real();
  }
  out.ep_flux = flux;
  out.ep_slope = -pressure_derivative(model, table, 0.0);
  const double scale = std::max({1e-30, std::abs(out.ep_flux), std::abs(out.ep_slope)});
  if (std::abs(out.ep_flux - out.ep_slope) > 1e-6 * scale &&
      std::abs(out.ep_flux - out.ep_slope) > 1e-10)
    throw std::runtime_error("flux/slope mismatch in entropy production");
  if (out.ep_flux < -1e-10 || out.ep_slope < -1e-10)
    throw std::runtime_error("negative entropy production");
  return out;
}

inline EntropyProduction entropy_production(const ModelSpec& model) {
  return entropy_production(model, build_rate_table(model));
}

struct RateFunctionResult {
  std::vector<double> s;
  std::vector<double> rate;        // I(s)
  std::vector<double> alpha_star;  // maximizer
  double a = 0.0;                  // one-sided slope of F at theta_-
  double b = 0.0;                  // one-sided slope of F at theta_+
  bool degenerate = false;         // F identically zero
};

// Legendre-Fenchel transform I(s) = sup_{-alpha in I} (s alpha - F(-alpha))
// of a scaled pressure F on I = [theta_-, theta_+], by golden-section search
// (F concave objective; tolerance 1e-10 in alpha).
inline RateFunctionResult rate_function(const std::function<double(double)>& big_f,
                                        double theta_minus, double theta_plus,
                                        const std::vector<double>& s_grid) {
  RateFunctionResult out;
  const double h = 1e-5 * (1.0 + std::abs(theta_minus));
  out.a = (-3.0 * big_f(theta_minus) + 4.0 * big_f(theta_minus + h) -
           big_f(theta_minus + 2.0 * h)) /
          (2.0 * h);
  const double h2 = 1e-5 * (1.0 + std::abs(theta_plus));
  out.b = (3.0 * big_f(theta_plus) - 4.0 * big_f(theta_plus - h2) +
           big_f(theta_plus - 2.0 * h2)) /
          (2.0 * h2);

  double fmax = 0.0;
  for (int i = 0; i <= 40; ++i)
    fmax = std::max(fmax,
                    std::abs(big_f(theta_minus + (theta_plus - theta_minus) * i / 40.0)));
  if (fmax < 1e-14) {
    out.degenerate = true;
    out.s = {0.0};
    out.rate = {0.0};
    out.alpha_star = {0.0};
    return out;
  }

  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  for (double s : s_grid) {
    if (!(s > out.a && s < out.b)) continue;
    // maximize g(gamma) = -s gamma - F(gamma) over [theta_-, theta_+]
    auto g = [&](double gamma) { return -s * gamma - big_f(gamma); };
    double lo = theta_minus, hi = theta_plus;
    double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
    double g1 = g(x1), g2 = g(x2);
    while (hi - lo > 1e-10) {
      if (g1 < g2) {
        lo = x1;
        x1 = x2;
        g1 = g2;
        x2 = lo + golden * (hi - lo);
        g2 = g(x2);
      } else {
        hi = x2;
        x2 = x1;
        g2 = g1;
        x1 = hi - golden * (hi - lo);
        g1 = g(x1);
      }
    }
    const double gamma_star = 0.5 * (lo + hi);
    out.s.push_back(s);
    out.rate.push_back(std::max(g(gamma_star), 0.0));
    out.alpha_star.push_back(-gamma_star);
  }
  return out;
}

// Rate function of a model curve: F = lambda^2 F2 evaluated exactly.
inline RateFunctionResult rate_function(const ModelSpec& model, const RateTable& table,
                                        const PressureCurve& curve,
                                        const std::vector<double>& s_grid) {
  const double l2 = model.lambda * model.lambda;
  auto big_f = [&](double alpha) { return l2 * pressure(model, alpha, table).value; };
  return rate_function(big_f, -curve.theta, 1.0 + curve.theta, s_grid);
}

struct FluctuationReport {
  PressureCurve curve;
  RateFunctionResult rate;
  EntropyProduction ep;
  double lambda = 0.0;
  bool tri = false;
  bool equilibrium = false;   // equal temperatures: F identically 0
  bool gc_symmetry = false;   // Galavotti-Cohen symmetry flag (TRI)
  size_t curve_hash = 0;      // shared by the initial-state and steady-state blocks
};

inline size_t hash_curve(const PressureCurve& c) {
  size_t h = 1469598103934665603ull;
  auto mix = [&h](double v) {
    unsigned long long bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(v));
    h ^= bits;
    h *= 1099511628211ull;
  };
  for (double v : c.alphas) mix(v);
  for (double v : c.values) mix(v);
  return h;
}

inline FluctuationReport gallavotti_cohen_report(const ModelSpec& model, double theta,
                                                 int npoints, const RateTable& table,
                                                 int threads = 1) {
  FluctuationReport rep;
  rep.curve = pressure_curve(model, theta, npoints, table, threads);
  rep.lambda = model.lambda;
  rep.tri = rep.curve.tri;
  rep.equilibrium = model.equal_temperatures();
  rep.gc_symmetry = rep.tri;
  rep.curve_hash = hash_curve(rep.curve);
  rep.ep = entropy_production(model, table);
  const double l2 = model.lambda * model.lambda;
  const double mean = l2 * rep.ep.ep_slope;
  std::vector<double> s_grid;
  const double span = std::max(4.0 * mean, 1e-3);
  for (int i = 0; i <= 80; ++i) s_grid.push_back(-span + 2.0 * span * i / 80.0);
  rep.rate = rate_function(model, table, rep.curve, s_grid);
  return rep;
}

}  // namespace sfent
