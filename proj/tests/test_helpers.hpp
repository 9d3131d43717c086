#pragma once

// Shared fixtures and independent oracles for the test suite. The quadrature
// helpers here are deliberately plain (fixed-step composite Simpson) so that
// reference values do not flow through the library's adaptive integrators.

#include "sfent/model.hpp"

#include <complex>
#include <functional>
#include <random>

namespace testutil {

using sfent::Complex;
using sfent::CouplingChannel;
using sfent::Matrix;
using sfent::ModelSpec;
using sfent::ReservoirSpec;
using sfent::SmallSystem;
using sfent::SpectralDensity;

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

// Two-level system, sigma_x coupling to two reservoirs with a common density.
inline ModelSpec simplest_model(double beta1, double beta2, double lambda,
                                const SpectralDensity& d) {
  std::vector<ReservoirSpec> res;
  res.push_back(ReservoirSpec(beta1, {CouplingChannel(pauli_x(), {d})}));
  res.push_back(ReservoirSpec(beta2, {CouplingChannel(pauli_x(), {d})}));
  return ModelSpec(SmallSystem(pauli_z()), std::move(res), lambda);
}

// flat-exp with amplitude e^2 so that J(2) = 1 exactly
inline SpectralDensity unit_at_two_density() {
  return SpectralDensity::flat_exp(std::exp(2.0), 1.0);
}

// Three-level system with a complex (non-real) coupling; breaks time reversal.
inline ModelSpec three_level_model(double lambda = 0.1) {
  Matrix h = Matrix::Zero(3, 3);
  h(0, 0) = 0.0;
  h(1, 1) = 1.0;
  h(2, 2) = 3.0;
  Matrix q(3, 3);
  q << 0.0, Complex(0.7, 0.3), Complex(0.2, -0.4),
       Complex(0.7, -0.3), 0.1, Complex(0.5, 0.1),
       Complex(0.2, 0.4), Complex(0.5, -0.1), -0.2;
  auto d = SpectralDensity::gauss_window(1.5, 0.0, 4.0);
  std::vector<ReservoirSpec> res;
  res.push_back(ReservoirSpec(0.8, {CouplingChannel(q, {d})}));
  res.push_back(ReservoirSpec(1.7, {CouplingChannel(q, {d})}));
  return ModelSpec(SmallSystem(h), std::move(res), lambda);
}

// Closed-form pressure of the two-level model with per-reservoir J_j(2).
inline double two_level_pressure(double alpha, const std::vector<double>& betas,
                                 const std::vector<double>& j2) {
  double g = 0.0, s1 = 0.0;
  for (size_t j = 0; j < betas.size(); ++j) {
    s1 += j2[j];
    for (size_t k = 0; k < betas.size(); ++k)
      g += (std::tanh(betas[j]) * std::tanh(betas[k]) +
            std::cosh((betas[j] - betas[k]) * (1.0 - 2.0 * alpha)) /
                (std::cosh(betas[j]) * std::cosh(betas[k]))) *
           j2[j] * j2[k];
  }
  return -M_PI / 2.0 * (s1 - std::sqrt(g));
}

// Plain composite Simpson, independent of the library quadrature.
template <typename F>
auto simpson(const F& f, double a, double b, int steps) -> decltype(f(0.0)) {
  if (steps % 2) ++steps;
  const double h = (b - a) / steps;
  auto sum = f(a) + f(b);
  for (int i = 1; i < steps; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * (h / 3.0);
}

// Reference correlation function by brute-force Simpson on a wide window.
inline Complex brute_correlation(const std::function<double(double)>& j, double beta,
                                 double t, double radius = 40.0, int steps = 200000) {
  auto f = [&](double s) {
    return Complex(0.5 * j(s) / (1.0 + std::exp(-beta * s))) *
           std::exp(Complex(0, t * s));
  };
  return simpson(f, -radius, radius, steps);
}

inline Matrix random_hermitian(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = Complex(u(rng), u(rng));
  return (m + Matrix(m.adjoint())) / 2.0;
}

inline Matrix random_density(int n, unsigned seed) {
  Matrix a = random_hermitian(n, seed);
  Matrix rho = a * a.adjoint() + 0.1 * Matrix::Identity(n, n);
  rho /= rho.trace().real();
  return rho;
}

}  // namespace testutil
