#pragma once

// JSON forms of label spaces, joints, solver settings and results.

#include <string>
#include <vector>

#include "json.hpp"
#include "pidlab/agreement.hpp"
#include "pidlab/error.hpp"
#include "pidlab/info.hpp"
#include "pidlab/label_space.hpp"
#include "pidlab/pid.hpp"

namespace pidlab {

using Json = nlohmann::json;

namespace detail {

inline const Json& require(const Json& obj, const char* key, const char* what) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::schema, std::string(what) + " lacks '" + key + "'");
  return *it;
}

template <class T>
T as(const Json& value, const char* key) {
  try {
    return value.get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::schema, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

/// {"kind": "nominal|ordinal|binned-continuous|qa-binary", "values": [...],
///  "bin_edges": [...], "range": [lo, hi]}. Numeric values are accepted
/// and kept in their JSON spelling.
inline LabelSpaceConfig label_space_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::schema, "label space must be a JSON object");
  LabelSpaceConfig config;
  config.kind = label_kind_from_string(detail::as<std::string>(detail::require(j, "kind", "label space"), "kind"));
  if (auto it = j.find("values"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::schema, "field 'values' must be an array");
    for (const auto& v : *it) {
      if (v.is_string()) {
        config.values.push_back(v.get<std::string>());
      } else if (v.is_number()) {
        config.values.push_back(v.dump());
      } else {
        throw Error(ErrorCode::schema, "label values must be strings or numbers");
      }
    }
  }
  if (auto it = j.find("bin_edges"); it != j.end()) {
    config.bin_edges = detail::as<std::vector<double>>(*it, "bin_edges");
  }
  if (auto it = j.find("range"); it != j.end()) {
    const auto r = detail::as<std::vector<int>>(*it, "range");
    if (r.size() != 2) throw Error(ErrorCode::schema, "field 'range' must be [lo, hi]");
    config.range = std::pair(r[0], r[1]);
  }
  return config;
}

inline Json to_json(const LabelSpace& space) {
  Json j{{"kind", to_string(space.kind())}, {"values", space.values()}};
  if (space.kind() == LabelKind::binned_continuous) j["bin_edges"] = space.bin_edges();
  return j;
}

inline Json to_json(const Joint3& p) {
  return Json{{"size", p.size()}, {"mass", std::vector<double>(p.mass().begin(), p.mass().end())}};
}

inline Joint3 joint3_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::schema, "joint must be a JSON object");
  const auto n = detail::as<std::size_t>(detail::require(j, "size", "joint"), "size");
  auto mass = detail::as<std::vector<double>>(detail::require(j, "mass", "joint"), "mass");
  if (mass.size() != n * n * n) {
    throw Error(ErrorCode::invalid_distribution,
                "joint mass has " + std::to_string(mass.size()) + " entries, expected size^3");
  }
  return Joint3(n, std::move(mass));
}

inline Json to_json(const SolverConfig& cfg) {
  return Json{{"tol_objective", cfg.tol_objective},
              {"tol_feasibility", cfg.tol_feasibility},
              {"max_iterations", cfg.max_iterations},
              {"step_rule", cfg.step_rule == StepRule::line_search ? "line-search" : "diminishing"}};
}

inline Json to_json(const ConsistencyReport& rep) {
  Json j;
  for (std::size_t i = 0; i < rep.residuals.size(); ++i) j[ConsistencyReport::kNames[i]] = rep.residuals[i];
  j["tolerance"] = rep.tolerance;
  j["passed"] = rep.passed;
  return j;
}

/// Components in bits plus solver diagnostics; q* is included on request.
inline Json to_json(const PIDResult& r, bool include_q_star = false) {
  Json j{{"r", r.r},
         {"u1", r.u1},
         {"u2", r.u2},
         {"s", r.s},
         {"total", r.total},
         {"iterations", r.iterations},
         {"objective_gap", r.objective_gap},
         {"feasibility_residual", r.feasibility_residual},
         {"converged", r.converged},
         {"negative_component", r.negative_component}};
  if (r.consistency) j["consistency"] = to_json(*r.consistency);
  if (include_q_star) j["q_star"] = to_json(r.q_star);
  return j;
}

inline Json to_json(const AlphaResult& a) {
  Json j{{"n_units", a.n_units}, {"n_pairable", a.n_pairable}};
  if (a.alpha) {
    j["alpha"] = *a.alpha;
  } else {
    j["alpha"] = "undefined";
    j["reason"] = a.message();
  }
  return j;
}

}  // namespace pidlab
