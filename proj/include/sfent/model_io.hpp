#pragma once

// Model files are JSON. Unknown fields are rejected everywhere. Layout:
//
// {
//   "dim": 2,
//   "hamiltonian": [[re, im], ...],          // N^2 row-major (re, im) pairs
//   "lambda": 0.2,
//   "reservoirs": [
//     { "beta": 1.0,
//       "channels": [
//         { "coupling_op": [[re, im], ...],  // N^2 row-major pairs
//           "densities": [ <density>, ... ]  // one per field factor
//         } ] } ],
//   "run": { ... optional defaults, see RunDefaults ... }
// }
//
// <density> is one of
//   {"family": "flat-exp", "amp": A, "corr": c}             J = A e^{-|u|/c}
//   {"family": "gauss-window", "amp": A, "center": u0, "width": w}
//                                            J = A e^{-((|u|-u0)/w)^2}
//   {"family": "tabulated", "points": [[u, J], ...],
//    "decay": {"amp": A, "rate": a, "cutoff": c}}           linear interpolation

#include "sfent/model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <string>

namespace sfent {

using nlohmann::json;

// Optional run-parameter defaults carried by the model file; command-line
// flags override these, and they override built-in defaults.
struct RunDefaults {
  std::optional<double> theta;
  std::optional<int> alpha_points;
  std::optional<double> lambda;
  std::optional<int> modes;
  std::optional<double> smax;
  std::optional<double> t_max;
  std::optional<int> t_points;
  std::optional<int> threads;
  std::optional<std::string> format;
};

struct ParsedModelFile {
  ModelSpec model;
  RunDefaults run;
};

namespace detail {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ParseError(where + ": unknown field '" + it.key() + "'");
}

inline double need_number(const json& obj, const std::string& key,
                          const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ParseError(where + ": missing numeric field '" + key + "'");
  return obj[key].get<double>();
}

inline Matrix parse_complex_matrix(const json& arr, Eigen::Index n,
                                   const std::string& where) {
  if (!arr.is_array() || arr.size() != static_cast<size_t>(n * n))
    throw ParseError(where + ": expected " + std::to_string(n * n) +
                     " (re, im) pairs");
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& pair = arr[static_cast<size_t>(r * n + c)];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
          !pair[1].is_number())
        throw ParseError(where + ": entry " + std::to_string(r * n + c) +
                         " is not an (re, im) pair");
      m(r, c) = Complex(pair[0].get<double>(), pair[1].get<double>());
    }
  return m;
}

inline SpectralDensity parse_density(const json& d, const std::string& where) {
  if (!d.is_object() || !d.contains("family") || !d["family"].is_string())
    throw ParseError(where + ": density needs a 'family' string");
  const std::string family = d["family"].get<std::string>();
  if (family == "flat-exp") {
    reject_unknown(d, {"family", "amp", "corr"}, where);
    return SpectralDensity::flat_exp(need_number(d, "amp", where),
                                     need_number(d, "corr", where));
  }
  if (family == "gauss-window") {
    reject_unknown(d, {"family", "amp", "center", "width"}, where);
    return SpectralDensity::gauss_window(need_number(d, "amp", where),
                                         need_number(d, "center", where),
                                         need_number(d, "width", where));
  }
  if (family == "tabulated") {
    reject_unknown(d, {"family", "points", "decay"}, where);
    if (!d.contains("points") || !d["points"].is_array())
      throw ParseError(where + ": tabulated density needs 'points'");
    std::vector<double> us, js;
    for (const auto& row : d["points"]) {
      if (!row.is_array() || row.size() != 2)
        throw ParseError(where + ": table rows are [u, J]");
      us.push_back(row[0].get<double>());
      js.push_back(row[1].get<double>());
    }
    if (!d.contains("decay") || !d["decay"].is_object())
      throw ParseError(where + ": tabulated density needs 'decay'");
    const auto& dec = d["decay"];
    reject_unknown(dec, {"amp", "rate", "cutoff"}, where + ".decay");
    DecayEnvelope env{need_number(dec, "amp", where), need_number(dec, "rate", where),
                      need_number(dec, "cutoff", where)};
    return SpectralDensity::tabulated(std::move(us), std::move(js), env);
  }
  throw ParseError(where + ": unknown density family '" + family + "'");
}

inline RunDefaults parse_run(const json& r) {
  RunDefaults run;
  reject_unknown(r,
                 {"theta", "alpha_points", "lambda", "modes", "smax", "t_max",
                  "t_points", "threads", "format"},
                 "run");
  if (r.contains("theta")) run.theta = r["theta"].get<double>();
  if (r.contains("alpha_points")) run.alpha_points = r["alpha_points"].get<int>();
  if (r.contains("lambda")) run.lambda = r["lambda"].get<double>();
  if (r.contains("modes")) run.modes = r["modes"].get<int>();
  if (r.contains("smax")) run.smax = r["smax"].get<double>();
  if (r.contains("t_max")) run.t_max = r["t_max"].get<double>();
  if (r.contains("t_points")) run.t_points = r["t_points"].get<int>();
  if (r.contains("threads")) run.threads = r["threads"].get<int>();
  if (r.contains("format")) run.format = r["format"].get<std::string>();
  return run;
}

}  // namespace detail

inline ParsedModelFile parse_model_json(const json& root) {
  using detail::ParseError;
  if (!root.is_object()) throw ParseError("model: top level must be an object");
  detail::reject_unknown(root, {"dim", "hamiltonian", "lambda", "reservoirs", "run"},
                         "model");
  if (!root.contains("dim") || !root["dim"].is_number_integer())
    throw ParseError("model: missing integer field 'dim'");
  const Eigen::Index n = root["dim"].get<Eigen::Index>();
  if (n < 1) throw ParseError("model: dim must be >= 1");
  if (!root.contains("hamiltonian"))
    throw ParseError("model: missing field 'hamiltonian'");
  const Matrix h = detail::parse_complex_matrix(root["hamiltonian"], n, "hamiltonian");
  const double lambda = detail::need_number(root, "lambda", "model");
  if (!root.contains("reservoirs") || !root["reservoirs"].is_array() ||
      root["reservoirs"].empty())
    throw ParseError("model: needs a nonempty 'reservoirs' array");

  std::vector<ReservoirSpec> reservoirs;
  int jr = 0;
  for (const auto& r : root["reservoirs"]) {
    const std::string where = "reservoirs[" + std::to_string(jr++) + "]";
    if (!r.is_object()) throw ParseError(where + ": must be an object");
    detail::reject_unknown(r, {"beta", "channels"}, where);
    const double beta = detail::need_number(r, "beta", where);
    if (!r.contains("channels") || !r["channels"].is_array() || r["channels"].empty())
      throw ParseError(where + ": needs a nonempty 'channels' array");
    std::vector<CouplingChannel> channels;
    int kc = 0;
    for (const auto& c : r["channels"]) {
      const std::string cw = where + ".channels[" + std::to_string(kc++) + "]";
      if (!c.is_object()) throw ParseError(cw + ": must be an object");
      detail::reject_unknown(c, {"coupling_op", "densities"}, cw);
      if (!c.contains("coupling_op"))
        throw ParseError(cw + ": missing 'coupling_op'");
      Matrix q = detail::parse_complex_matrix(c["coupling_op"], n, cw + ".coupling_op");
      if (!c.contains("densities") || !c["densities"].is_array() ||
          c["densities"].empty())
        throw ParseError(cw + ": needs a nonempty 'densities' array");
      std::vector<SpectralDensity> densities;
      int md = 0;
      for (const auto& d : c["densities"])
        densities.push_back(
            detail::parse_density(d, cw + ".densities[" + std::to_string(md++) + "]"));
      channels.emplace_back(std::move(q), std::move(densities));
    }
    reservoirs.emplace_back(beta, std::move(channels));
  }

  RunDefaults run;
  if (root.contains("run")) run = detail::parse_run(root["run"]);
  return {ModelSpec(SmallSystem(h), std::move(reservoirs), lambda), run};
}

inline ParsedModelFile load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw detail::ParseError("cannot open model file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw detail::ParseError(std::string("model file parse error: ") + e.what());
  }
  return parse_model_json(root);
}

}  // namespace sfent
