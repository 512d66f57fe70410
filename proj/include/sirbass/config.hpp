#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "continuum.hpp"
#include "exact.hpp"
#include "model.hpp"
#include "stochastic.hpp"

namespace sirbass {

using json = nlohmann::json;

class ConfigError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

namespace detail {

template <class E>
struct EnumNames;

template <>
struct EnumNames<Topology> {
  static constexpr std::pair<Topology, const char*> v[] = {{Topology::finite_line, "finite_line"},
                                                          {Topology::semi_infinite_line, "semi_infinite_line"},
                                                          {Topology::infinite_line, "infinite_line"}};
};
template <>
struct EnumNames<Sidedness> {
  static constexpr std::pair<Sidedness, const char*> v[] = {{Sidedness::one_sided, "one_sided"},
                                                            {Sidedness::two_sided, "two_sided"}};
};
template <>
struct EnumNames<Engine> {
  static constexpr std::pair<Engine, const char*> v[] = {{Engine::discrete, "discrete"},
                                                         {Engine::discrete_literal, "discrete_literal"},
                                                         {Engine::continuous, "continuous"}};
};
template <>
struct EnumNames<Rescaling> {
  static constexpr std::pair<Rescaling, const char*> v[] = {{Rescaling::local, "local"},
                                                            {Rescaling::transport, "transport"}};
};

template <class E>
std::string enum_name(E e) {
  for (auto [val, name] : EnumNames<E>::v)
    if (val == e) return name;
  throw ConfigError("unknown enum value");
}

template <class E>
E enum_parse(const json& j, const std::string& what) {
  const auto s = j.get<std::string>();
  for (auto [val, name] : EnumNames<E>::v)
    if (s == name) return val;
  throw ConfigError("unknown " + what + " '" + s + "'");
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->template get<T>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

// ---- spatial / temporal / descriptor ----------------------------------------

inline json to_json_value(const SpatialPart& s) {
  if (auto c = std::get_if<ConstantSpace>(&s)) return {{"constant", c->value}};
  if (auto a = std::get_if<AffineSpace>(&s)) {
    json j{{"intercept", a->intercept}, {"slope", a->slope}};
    if (a->clamp) j["clamp"] = {a->clamp->first, a->clamp->second};
    return {{"affine", j}};
  }
  const auto& t = std::get<TableSpace>(s);
  return {{"table", {{"first_node", t.first_node}, {"values", t.values}}}};
}

inline SpatialPart spatial_from_json(const json& j) {
  if (j.is_number()) return ConstantSpace{j.get<double>()};
  if (!j.is_object() || j.size() != 1) throw ConfigError("spatial part must be a number or a one-key object");
  const auto& [key, v] = *j.items().begin();
  if (key == "constant") return ConstantSpace{v.get<double>()};
  if (key == "affine") {
    detail::reject_unknown(v, {"intercept", "slope", "clamp"}, "affine");
    AffineSpace a{detail::field_or(v, "intercept", 0.0), detail::field_or(v, "slope", 0.0), {}};
    if (v.contains("clamp")) a.clamp = std::make_pair(v["clamp"].at(0).get<double>(), v["clamp"].at(1).get<double>());
    return a;
  }
  if (key == "table") {
    detail::reject_unknown(v, {"first_node", "values"}, "table");
    return TableSpace{detail::field_or(v, "first_node", 0), v.at("values").get<std::vector<double>>()};
  }
  throw ConfigError("unknown spatial kind '" + key + "'");
}

inline json to_json_value(const TemporalPart& t) {
  if (std::holds_alternative<Steady>(t)) return "steady";
  if (auto e = std::get_if<ExponentialTime>(&t)) return {{"exponential", {{"amplitude", e->amplitude}, {"rate", e->rate}}}};
  const auto& p = std::get<PiecewiseTime>(t);
  return {{"piecewise", {{"breaks", p.breaks}, {"values", p.values}}}};
}

inline TemporalPart temporal_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "steady") return Steady{};
  if (!j.is_object() || j.size() != 1) throw ConfigError("temporal part must be \"steady\" or a one-key object");
  const auto& [key, v] = *j.items().begin();
  if (key == "exponential") {
    detail::reject_unknown(v, {"amplitude", "rate"}, "exponential");
    return ExponentialTime{detail::field_or(v, "amplitude", 1.0), detail::field_or(v, "rate", 0.0)};
  }
  if (key == "piecewise") {
    detail::reject_unknown(v, {"breaks", "values"}, "piecewise");
    return PiecewiseTime{v.at("breaks").get<std::vector<double>>(), v.at("values").get<std::vector<double>>()};
  }
  throw ConfigError("unknown temporal kind '" + key + "'");
}

inline json to_json_value(const Descriptor& d) { return {{"space", to_json_value(d.space)}, {"time", to_json_value(d.time)}}; }

// A bare number is a constant, steady rate.
inline Descriptor descriptor_from_json(const json& j) {
  if (j.is_number()) return Descriptor{j.get<double>()};
  if (j.is_object() && (j.contains("space") || j.contains("time"))) {
    detail::reject_unknown(j, {"space", "time"}, "descriptor");
    return Descriptor{j.contains("space") ? spatial_from_json(j["space"]) : SpatialPart{ConstantSpace{1.0}},
                      j.contains("time") ? temporal_from_json(j["time"]) : TemporalPart{Steady{}}};
  }
  return Descriptor{spatial_from_json(j)};
}

// ---- scenario ----------------------------------------------------------------

inline json to_json_value(const Scenario& s) {
  const auto& L = s.lattice;
  json lat{{"topology", detail::enum_name(L.topology)},
           {"sidedness", detail::enum_name(L.sidedness)},
           {"size", L.size},
           {"window", {L.window_first, L.window_last}},
           {"x0", L.geometry.x0},
           {"dx", L.geometry.dx}};
  json params{{"p", to_json_value(s.params.p)},
              {"q", to_json_value(s.params.q_left)},
              {"q_right", to_json_value(s.params.q_right)},
              {"r", to_json_value(s.params.r)}};
  json ov = json::array();
  for (const auto& [k, v] : s.init.overrides) ov.push_back({{"node", k}, {"S", v.S}, {"I", v.I}, {"R", v.R}});
  json init{{"S", to_json_value(s.init.susceptible)},
            {"I", to_json_value(s.init.infected)},
            {"R", to_json_value(s.init.recovered)},
            {"overrides", ov}};
  return {{"lattice", lat}, {"params", params}, {"initial", init}, {"horizon", s.horizon}, {"grid_step", s.grid_step}};
}

inline Scenario scenario_from_json(const json& j) {
  detail::reject_unknown(j, {"lattice", "params", "initial", "horizon", "grid_step"}, "scenario");
  Scenario s;
  const auto& l = j.at("lattice");
  detail::reject_unknown(l, {"topology", "sidedness", "size", "window", "x0", "dx"}, "lattice");
  s.lattice.topology = detail::enum_parse<Topology>(l.at("topology"), "topology");
  s.lattice.sidedness = l.contains("sidedness") ? detail::enum_parse<Sidedness>(l["sidedness"], "sidedness")
                                                : Sidedness::one_sided;
  s.lattice.size = detail::field_or(l, "size", 1);
  if (l.contains("window")) {
    s.lattice.window_first = l["window"].at(0).get<int>();
    s.lattice.window_last = l["window"].at(1).get<int>();
  } else if (s.lattice.topology == Topology::finite_line) {
    s.lattice.window_first = 0;
    s.lattice.window_last = s.lattice.size - 1;
  } else {
    throw ConfigError("lattice.window is required on unbounded lines");
  }
  s.lattice.geometry = {detail::field_or(l, "x0", 0.0), detail::field_or(l, "dx", 1.0)};

  const auto& p = j.at("params");
  detail::reject_unknown(p, {"p", "q", "q_left", "q_right", "r"}, "params");
  if (p.contains("q") && p.contains("q_left")) throw ConfigError("params.q and params.q_left are aliases; give one");
  s.params.p = p.contains("p") ? descriptor_from_json(p["p"]) : Descriptor{0.0};
  s.params.q_left = p.contains("q") ? descriptor_from_json(p["q"])
                                    : (p.contains("q_left") ? descriptor_from_json(p["q_left"]) : Descriptor{0.0});
  s.params.q_right = p.contains("q_right") ? descriptor_from_json(p["q_right"]) : Descriptor{0.0};
  s.params.r = p.contains("r") ? descriptor_from_json(p["r"]) : Descriptor{0.0};

  if (j.contains("initial")) {
    const auto& in = j["initial"];
    detail::reject_unknown(in, {"S", "I", "R", "overrides"}, "initial");
    if (in.contains("S")) s.init.susceptible = spatial_from_json(in["S"]);
    if (in.contains("I")) s.init.infected = spatial_from_json(in["I"]);
    if (in.contains("R")) s.init.recovered = spatial_from_json(in["R"]);
    if (in.contains("overrides"))
      for (const auto& o : in["overrides"]) {
        detail::reject_unknown(o, {"node", "S", "I", "R"}, "initial.overrides");
        s.init.overrides[o.at("node").get<int>()] = {detail::field_or(o, "S", 0.0), detail::field_or(o, "I", 0.0),
                                                     detail::field_or(o, "R", 0.0)};
      }
  }
  s.horizon = j.at("horizon").get<double>();
  s.grid_step = detail::field_or(j, "grid_step", s.horizon);
  return s;
}

inline std::string scenario_to_text(const Scenario& s) { return to_json_value(s).dump(2) + "\n"; }

inline Scenario scenario_from_text(const std::string& text) {
  try {
    return scenario_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
}

// ---- run settings --------------------------------------------------------------

inline json to_json_value(const SimulationConfig& c) {
  return {{"seed", c.seed},
          {"replications", c.replications},
          {"dt", c.dt},
          {"engine", detail::enum_name(c.engine)},
          {"threads", c.threads}};
}

inline SimulationConfig simulation_from_json(const json& j) {
  detail::reject_unknown(j, {"seed", "replications", "dt", "engine", "threads"}, "simulation");
  SimulationConfig c;
  c.seed = detail::field_or(j, "seed", c.seed);
  c.replications = detail::field_or(j, "replications", c.replications);
  c.dt = detail::field_or(j, "dt", c.dt);
  if (j.contains("engine")) c.engine = detail::enum_parse<Engine>(j["engine"], "engine");
  c.threads = detail::field_or(j, "threads", c.threads);
  return c;
}

inline ContinuumScenario continuum_from_json(const json& j) {
  if (j.contains("family")) {
    const auto f = j["family"].get<std::string>();
    ContinuumScenario cs;
    if (f == "local_benchmark")
      cs = local_benchmark();
    else if (f == "transport_benchmark")
      cs = transport_benchmark();
    else
      throw ConfigError("unknown continuum family '" + f + "'");
    return cs;
  }
  detail::reject_unknown(j, {"rescaling", "x_lo", "x_hi", "horizon", "p", "q", "r", "S0", "I0", "R0"}, "continuum");
  ContinuumScenario cs;
  cs.rescaling = detail::enum_parse<Rescaling>(j.at("rescaling"), "rescaling");
  cs.x_lo = j.at("x_lo").get<double>();
  cs.x_hi = j.at("x_hi").get<double>();
  cs.horizon = j.at("horizon").get<double>();
  cs.p = j.contains("p") ? descriptor_from_json(j["p"]) : Descriptor{0.0};
  cs.q = j.contains("q") ? descriptor_from_json(j["q"]) : Descriptor{0.0};
  cs.r = j.contains("r") ? descriptor_from_json(j["r"]) : Descriptor{0.0};
  if (j.contains("S0")) cs.S0 = spatial_from_json(j["S0"]);
  if (j.contains("I0")) cs.I0 = spatial_from_json(j["I0"]);
  if (j.contains("R0")) cs.R0 = spatial_from_json(j["R0"]);
  return cs;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace sirbass
