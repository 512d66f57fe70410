#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "closed_forms.hpp"
#include "model.hpp"

namespace sirbass {

class UnknownFormula : public ValidationError {
public:
  using ValidationError::ValidationError;
};

using FormulaParams = std::map<std::string, double>;

struct FormulaInfo {
  std::string id;
  std::vector<std::string> params;  // required names; "p0_rate" is optional for point sources
  std::string summary;
  std::function<double(const FormulaParams&, long, double)> eval;
};

namespace detail {

inline double need(const FormulaParams& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw ValidationError("missing formula parameter '" + name + "'", {}, {});
  return it->second;
}

inline Descriptor point_source_rate(const FormulaParams& p) {
  const double amp = need(p, "p0");
  auto it = p.find("p0_rate");
  if (it == p.end() || it->second == 0.0) return Descriptor{amp};
  return Descriptor{ConstantSpace{amp}, ExponentialTime{1.0, it->second}};
}

}  // namespace detail

inline const std::vector<FormulaInfo>& formula_registry() {
  using detail::need;
  static const std::vector<FormulaInfo> reg = {
      {"bass_formula", {"p", "q"}, "aggregate Bass adoption I(t)",
       [](const FormulaParams& a, long, double t) { return closed::bass_formula(need(a, "p"), need(a, "q"), t); }},
      {"homogeneous_bass", {"S0", "p", "q"}, "[S](t), homogeneous one-sided Bass",
       [](const FormulaParams& a, long, double t) {
         return closed::homogeneous_bass(need(a, "S0"), need(a, "p"), need(a, "q"), t);
       }},
      {"homogeneous_sir_bass_S", {"S0", "R0", "p", "q", "r"}, "[S](t), homogeneous one-sided SIR-Bass",
       [](const FormulaParams& a, long, double t) {
         return closed::homogeneous_sir_bass(need(a, "S0"), need(a, "R0"), need(a, "p"), need(a, "q"), need(a, "r"), t).S;
       }},
      {"homogeneous_sir_bass_R", {"S0", "R0", "p", "q", "r"}, "[R](t), homogeneous one-sided SIR-Bass",
       [](const FormulaParams& a, long, double t) {
         return closed::homogeneous_sir_bass(need(a, "S0"), need(a, "R0"), need(a, "p"), need(a, "q"), need(a, "r"), t).R;
       }},
      {"patient_zero_bass", {"p", "q"}, "[S_k](t) with node 0 infected",
       [](const FormulaParams& a, long k, double t) { return closed::patient_zero_bass(need(a, "p"), need(a, "q"), k, t); }},
      {"expected_infected_bass", {"p", "q"}, "expected infected among nodes 1..k",
       [](const FormulaParams& a, long k, double t) {
         return closed::expected_infected_bass(need(a, "p"), need(a, "q"), k, t);
       }},
      {"patient_zero_two_sided_bass", {"p", "q_left", "q_right"}, "[S_k](t), two-sided, node 0 infected",
       [](const FormulaParams& a, long k, double t) {
         return closed::patient_zero_two_sided_bass(need(a, "p"), need(a, "q_left"), need(a, "q_right"), k, t);
       }},
      {"point_source_bass", {"p0", "q"}, "[S_k](t) under a point source at node 0",
       [](const FormulaParams& a, long k, double t) {
         return closed::point_source_bass(detail::point_source_rate(a), need(a, "q"), k, t);
       }},
      {"point_source_sir", {"p0", "q", "r"}, "[S_k](t) under a point source at node 0 with recovery",
       [](const FormulaParams& a, long k, double t) {
         return closed::point_source_sir(detail::point_source_rate(a), need(a, "q"), need(a, "r"), k, t);
       }},
      {"patient_zero_sir", {"q", "r"}, "[S_k](t), SIR with node 0 infected",
       [](const FormulaParams& a, long k, double t) { return closed::patient_zero_sir(need(a, "q"), need(a, "r"), k, t); }},
      {"expected_susceptible_sir", {"q", "r"}, "expected susceptible among nodes 1..k",
       [](const FormulaParams& a, long k, double t) {
         return closed::expected_susceptible_sir(need(a, "q"), need(a, "r"), k, t);
       }},
      {"sir_final_state_S", {"S0", "I0", "R0", "q", "r"}, "[S](infinity), homogeneous SIR",
       [](const FormulaParams& a, long, double) {
         return closed::sir_final_state(need(a, "S0"), need(a, "I0"), need(a, "R0"), need(a, "q"), need(a, "r")).S;
       }},
  };
  return reg;
}

inline const FormulaInfo& find_formula(const std::string& id) {
  for (const auto& f : formula_registry())
    if (f.id == id) return f;
  std::string known;
  for (const auto& f : formula_registry()) known += (known.empty() ? "" : ", ") + f.id;
  throw UnknownFormula("unknown formula id '" + id + "' (known: " + known + ")");
}

}  // namespace sirbass
