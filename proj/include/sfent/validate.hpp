#pragma once

// Machine-checkable model contracts: Hermiticity, positivity of the spectral
// densities, strict positivity of golden-rule rates at every Bohr frequency,
// triviality of the joint commutant of {Q_{j,k}, H_S} per reservoir, reality
// of H_S and i^{n(n-1)/2} Q in the supplied basis, and the equal-temperature
// flag. Re-running on the same model yields identical results.

#include "sfent/goldenrule.hpp"
#include "sfent/model.hpp"

#include <Eigen/SVD>

#include <sstream>
#include <string>
#include <vector>

namespace sfent {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool equal_temperatures = false;
  bool time_reversal_invariant = false;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

// Dimension of { X : [X, A] = 0 for all A in ops } via SVD nullity of the
// stacked commutator superoperators.
inline int commutant_dimension(const std::vector<Matrix>& ops, Eigen::Index n) {
  Matrix stacked(static_cast<Eigen::Index>(ops.size()) * n * n, n * n);
  for (size_t i = 0; i < ops.size(); ++i)
    stacked.middleRows(static_cast<Eigen::Index>(i) * n * n, n * n) =
        left_mult_superop(ops[i]) - right_mult_superop(ops[i]);
  Eigen::JacobiSVD<Matrix> svd(stacked);
  const auto& sv = svd.singularValues();
  const double tol = 1e-10 * (sv.size() > 0 ? 1.0 + sv(0) : 1.0);
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= tol) ++nullity;
  nullity += static_cast<int>(n * n - sv.size());
  return nullity;
}

inline ValidationReport validate(const ModelSpec& model) {
  ValidationReport report;
  const auto& sys = model.system;
  const Eigen::Index n = sys.dim();

  // hermiticity (constructors already enforce it; report the residuals)
  {
    double worst = (sys.hamiltonian() - sys.hamiltonian().adjoint()).cwiseAbs().maxCoeff();
    for (const auto& r : model.reservoirs)
      for (const auto& ch : r.channels)
        worst = std::max(worst,
                         (ch.coupling_op - ch.coupling_op.adjoint()).cwiseAbs().maxCoeff());
    report.checks.push_back({"hermiticity", worst <= kHermTol, worst, kHermTol, ""});
  }

  // positivity of every density on a sample grid spanning its support
  {
    double most_negative = 0.0;
    for (const auto& r : model.reservoirs)
      for (const auto& ch : r.channels)
        for (const auto& d : ch.densities) {
          const double radius = d.truncation_radius(kTailTol);
          for (int i = 0; i <= 400; ++i) {
            const double u = -radius + 2.0 * radius * i / 400.0;
            most_negative = std::min(most_negative, d(u));
          }
        }
    report.checks.push_back(
        {"density-positivity", most_negative >= 0.0, most_negative, 0.0, ""});
  }

  // coverage of tabulated grids vs Bohr frequencies
  const auto freqs = bohr_frequencies(sys);
  {
    const double need = 2.0 * std::abs(freqs.back());
    double cover = std::numeric_limits<double>::infinity();
    for (const auto& r : model.reservoirs)
      for (const auto& ch : r.channels)
        for (const auto& d : ch.densities) cover = std::min(cover, d.coverage());
    const bool ok = cover >= need;
    report.checks.push_back({"density-coverage", ok,
                             std::isinf(cover) ? need : cover, need,
                             ok ? "" : "tabulated grid narrower than twice the Bohr range"});
  }

  // golden-rule positivity: c_{j,k}(u) > 0 at every Bohr frequency
  {
    double worst = std::numeric_limits<double>::infinity();
    std::ostringstream where;
    for (size_t j = 0; j < model.reservoirs.size(); ++j)
      for (size_t k = 0; k < model.reservoirs[j].channels.size(); ++k)
        for (double u : freqs) {
          const double c =
              rate(model.reservoirs[j].channels[k], model.reservoirs[j].beta, u);
          if (c < worst) {
            worst = c;
            where.str("");
            where << "min at (j=" << j << ",k=" << k << ",u=" << u << ")";
          }
        }
    report.checks.push_back(
        {"golden-rule-rates", worst > 0.0, worst, 0.0, where.str()});
  }

  // joint commutant of {Q_{j,k}} and H_S is trivial, reservoir by reservoir
  {
    bool ok = true;
    int worst_dim = 1;
    for (const auto& r : model.reservoirs) {
      std::vector<Matrix> ops{sys.hamiltonian()};
      for (const auto& ch : r.channels) ops.push_back(ch.coupling_op);
      const int d = commutant_dimension(ops, n);
      worst_dim = std::max(worst_dim, d);
      if (d != 1) ok = false;
    }
    report.checks.push_back({"commutant-trivial", ok, static_cast<double>(worst_dim),
                             1.0, ok ? "" : "joint commutant not trivial"});
  }

  // reality of H_S and i^{n(n-1)/2} Q in the supplied basis
  {
    double worst = sys.hamiltonian().imag().cwiseAbs().maxCoeff();
    for (const auto& r : model.reservoirs)
      for (const auto& ch : r.channels) {
        const int ord = ch.order();
        const Complex phase = std::pow(Complex(0, 1), (ord * (ord - 1) / 2) % 4);
        worst = std::max(worst, (phase * ch.coupling_op).imag().cwiseAbs().maxCoeff());
      }
    bool symmetric = true;
    for (const auto& r : model.reservoirs)
      for (const auto& ch : r.channels)
        for (const auto& d : ch.densities) symmetric = symmetric && d.symmetric();
    report.checks.push_back({"time-reversal-reality", worst <= kHermTol && symmetric,
                             worst, kHermTol,
                             symmetric ? "" : "asymmetric density"});
  }

  report.equal_temperatures = model.equal_temperatures();
  report.time_reversal_invariant = model.time_reversal_invariant();
  return report;
}

}  // namespace sfent
