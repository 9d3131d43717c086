#pragma once

// CSV and JSON writers for curves, rate tables, functional series and
// reports. All numeric output is locale-independent ('.' decimal separator)
// and printed with enough digits to round-trip doubles, so identical runs
// give byte-identical files.

#include "sfent/fockbath.hpp"
#include "sfent/functionals.hpp"
#include "sfent/superoperator.hpp"
#include "sfent/validate.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace sfent {

inline std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

inline std::string pressure_curve_csv(const PressureCurve& curve) {
  std::ostringstream os;
  os << "alpha,F2,gap,symmetry_residual\n";
  for (size_t i = 0; i < curve.alphas.size(); ++i) {
    const size_t mirror = curve.alphas.size() - 1 - i;
    const double res =
        curve.tri ? std::abs(curve.values[i] - curve.values[mirror]) : 0.0;
    os << format_double(curve.alphas[i]) << ',' << format_double(curve.values[i])
       << ',' << format_double(curve.gaps[i]) << ',' << format_double(res) << '\n';
  }
  return os.str();
}

inline std::string rate_function_csv(const RateFunctionResult& r) {
  std::ostringstream os;
  os << "s,I,alpha_star\n";
  for (size_t i = 0; i < r.s.size(); ++i)
    os << format_double(r.s[i]) << ',' << format_double(r.rate[i]) << ','
       << format_double(r.alpha_star[i]) << '\n';
  return os.str();
}

inline std::string rate_table_csv(const RateTable& table) {
  std::ostringstream os;
  os << "reservoir,channel,u,c,s,quad_error\n";
  for (const auto& e : table.entries)
    os << e.reservoir << ',' << e.channel << ',' << format_double(e.frequency) << ','
       << format_double(e.c) << ',' << format_double(e.s) << ','
       << format_double(e.quad_error) << '\n';
  return os.str();
}

// Superoperator as JSON: dimension, vectorization tag, row-major entries.
inline nlohmann::json superoperator_json(const Superoperator& op) {
  nlohmann::json j;
  j["dim"] = op.dim;
  j["convention"] = "column-stacking";
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < op.matrix.rows(); ++r)
    for (Eigen::Index c = 0; c < op.matrix.cols(); ++c)
      rows.push_back({op.matrix(r, c).real(), op.matrix(r, c).imag()});
  j["entries"] = std::move(rows);
  return j;
}

inline nlohmann::json validation_json(const ValidationReport& report) {
  nlohmann::json j;
  j["all_passed"] = report.all_passed();
  j["equal_temperatures"] = report.equal_temperatures;
  j["time_reversal_invariant"] = report.time_reversal_invariant;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    nlohmann::json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["measured"] = c.measured;
    e["tolerance"] = c.tolerance;
    if (!c.detail.empty()) e["detail"] = c.detail;
    checks.push_back(e);
  }
  j["checks"] = std::move(checks);
  return j;
}

inline nlohmann::json fluctuation_report_json(const FluctuationReport& rep,
                                              const nlohmann::json& config_echo) {
  nlohmann::json j;
  j["lambda"] = rep.lambda;
  j["tri"] = rep.tri;
  j["equilibrium"] = rep.equilibrium;
  if (rep.equilibrium) j["note"] = "equilibrium: F identically 0";
  j["curve_hash"] = rep.curve_hash;
  j["entropy_production"] = {{"flux_route", rep.ep.ep_flux},
                             {"slope_route", rep.ep.ep_slope}};
  j["initial_state_block"] = {  // fluctuations w.r.t. the initial state
      {"curve_hash", rep.curve_hash},
      {"symmetry_residual", rep.curve.symmetry_residual},
      {"F2_at_0", rep.curve.value_at_zero},
      {"F2_at_1", rep.curve.value_at_one}};
  j["steady_state_block"] = {  // same functional: the two theorems coincide here
      {"curve_hash", rep.curve_hash},
      {"symmetry_flag", rep.gc_symmetry},
      {"identified_with_initial_state_block", true}};
  j["rate_function"] = {{"a", rep.rate.a},
                        {"b", rep.rate.b},
                        {"degenerate", rep.rate.degenerate}};
  j["config"] = config_echo;
  return j;
}

inline std::string functional_series_csv(const std::vector<double>& ts,
                                         const std::vector<Complex>& alphas,
                                         const std::vector<std::vector<Complex>>& f2tm,
                                         const std::vector<std::vector<Complex>>& feast,
                                         const std::vector<std::vector<Complex>>& fqpsc) {
  std::ostringstream os;
  os << "t,alpha_re,alpha_im,f2tm_re,f2tm_im,feast,fqpsc_re,fqpsc_im\n";
  for (size_t ai = 0; ai < alphas.size(); ++ai)
    for (size_t ti = 0; ti < ts.size(); ++ti)
      os << format_double(ts[ti]) << ',' << format_double(alphas[ai].real()) << ','
         << format_double(alphas[ai].imag()) << ','
         << format_double(f2tm[ai][ti].real()) << ','
         << format_double(f2tm[ai][ti].imag()) << ','
         << format_double(feast[ai][ti].real()) << ','
         << format_double(fqpsc[ai][ti].real()) << ','
         << format_double(fqpsc[ai][ti].imag()) << '\n';
  return os.str();
}

}  // namespace sfent
