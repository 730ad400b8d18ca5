#ifndef GTR_SCENARIO_HPP
#define GTR_SCENARIO_HPP

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtr/bloch.hpp"
#include "gtr/diagnostics.hpp"
#include "gtr/engine.hpp"
#include "gtr/error.hpp"

namespace gtr {

using Json = nlohmann::json;

inline constexpr const char* scenario_format_version = "gtr-1";
inline constexpr const char* results_format_version = "gtr-results-1";
inline constexpr const char* build_version = "0.1.0";

/// Schema violations carry the JSON path of the offending field.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace expr {

// Tiny constant grammar for exact numbers in scenario files:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := number | 'pi' | 'sqrt' '(' expr ')' | 'cos' '(' expr ')'
//           | '(' expr ')' | '-' factor
class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  double parse() {
    const double v = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters in expression");
    return v;
  }

 private:
  double parse_expr() {
    double v = parse_term();
    for (;;) {
      skip_ws();
      if (consume('+'))
        v += parse_term();
      else if (consume('-'))
        v -= parse_term();
      else
        return v;
    }
  }

  double parse_term() {
    double v = parse_factor();
    for (;;) {
      skip_ws();
      if (consume('*'))
        v *= parse_factor();
      else if (consume('/')) {
        const double d = parse_factor();
        if (d == 0.0) fail("division by zero");
        v /= d;
      } else
        return v;
    }
  }

  double parse_factor() {
    skip_ws();
    if (consume('-')) return -parse_factor();
    if (consume('(')) {
      const double v = parse_expr();
      expect(')');
      return v;
    }
    if (consume_word("pi")) return 3.14159265358979323846264338327950288;
    if (consume_word("sqrt")) return std::sqrt(parse_parenthesized());
    if (consume_word("cos")) return std::cos(parse_parenthesized());
    return parse_number();
  }

  double parse_parenthesized() {
    skip_ws();
    expect('(');
    const double v = parse_expr();
    expect(')');
    return v;
  }

  double parse_number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
            s_[pos_] == 'e' || s_[pos_] == 'E' ||
            ((s_[pos_] == '+' || s_[pos_] == '-') && pos_ > start &&
             (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E'))))
      ++pos_;
    if (pos_ == start) fail("expected a number");
    try {
      return std::stod(s_.substr(start, pos_ - start));
    } catch (const std::exception&) {
      fail("malformed number");
    }
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool consume(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool consume_word(const std::string& w) {
    skip_ws();
    if (s_.compare(pos_, w.size(), w) == 0) {
      const std::size_t end = pos_ + w.size();
      if (end == s_.size() || !std::isalnum(static_cast<unsigned char>(s_[end]))) {
        pos_ = end;
        return true;
      }
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw std::runtime_error("expression \"" + s_ + "\": " + msg);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

inline double evaluate(const std::string& text) { return Parser(text).parse(); }

}  // namespace expr

namespace schema {

// Numbers are plain JSON numbers or {"expr": "1/sqrt(2)"}.
inline double number_at(const Json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_object() && j.contains("expr") && j["expr"].is_string()) {
    try {
      return expr::evaluate(j["expr"].get<std::string>());
    } catch (const std::exception& e) {
      throw SchemaError(path + ".expr", e.what());
    }
  }
  throw SchemaError(path, "expected a number or {\"expr\": ...}");
}

inline const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(path + "." + key, "missing field");
  return j.at(key);
}

inline std::string string_at(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> number_list(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<int> int_list(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer())
      throw SchemaError(path + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back(j[i].get<int>());
  }
  return out;
}

}  // namespace schema

/// Parses a density spec: {"kind": "uniform" | "epsilon" | "piecewise" |
/// "cellular" | "cellular-grid" | "atomic", ...}.
inline MembraneDensity density_from_json(const Json& j, const std::string& path) {
  const std::string kind = schema::string_at(schema::field(j, "kind", path), path + ".kind");
  try {
    if (kind == "uniform") return MembraneDensity::uniform();
    if (kind == "epsilon")
      return MembraneDensity::epsilon_interval(
          schema::number_at(schema::field(j, "eps", path), path + ".eps"));
    if (kind == "piecewise")
      return MembraneDensity::piecewise(
          schema::number_list(schema::field(j, "breaks", path), path + ".breaks"),
          schema::number_list(schema::field(j, "weights", path), path + ".weights"));
    if (kind == "cellular") {
      const Json& n = schema::field(j, "n", path);
      if (!n.is_number_integer()) throw SchemaError(path + ".n", "expected an integer");
      return MembraneDensity::cellular(
          n.get<int>(), schema::int_list(schema::field(j, "breakable", path), path + ".breakable"));
    }
    if (kind == "cellular-grid") {
      const Json& r = schema::field(j, "resolution", path);
      if (!r.is_number_integer()) throw SchemaError(path + ".resolution", "expected an integer");
      return MembraneDensity::cellular_grid(
          r.get<int>(), schema::int_list(schema::field(j, "breakable", path), path + ".breakable"));
    }
    if (kind == "atomic") {
      auto locs = schema::number_list(schema::field(j, "locs", path), path + ".locs");
      auto masses = schema::number_list(schema::field(j, "masses", path), path + ".masses");
      std::optional<MembraneDensity> continuous;
      if (j.contains("continuous"))
        continuous = density_from_json(j["continuous"], path + ".continuous");
      return MembraneDensity::atomic(std::move(locs), std::move(masses), std::move(continuous));
    }
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  throw SchemaError(path + ".kind", "unknown density kind '" + kind + "'");
}

inline Json density_to_json(const MembraneDensity& d) {
  Json j;
  switch (d.kind()) {
    case DensityKind::Uniform: j["kind"] = "uniform"; break;
    case DensityKind::Epsilon:
      j["kind"] = "epsilon";
      j["eps"] = d.eps();
      break;
    case DensityKind::Piecewise:
      j["kind"] = "piecewise";
      j["breaks"] = d.piecewise_breaks();
      j["weights"] = d.piecewise_weights();
      break;
    case DensityKind::Cellular:
      j["kind"] = "cellular";
      j["n"] = d.cell_count();
      j["breakable"] = d.breakable_cells();
      break;
    case DensityKind::CellularGrid:
      j["kind"] = "cellular-grid";
      j["resolution"] = d.grid_resolution();
      j["breakable"] = d.breakable_cells();
      break;
    case DensityKind::Atomic: {
      j["kind"] = "atomic";
      std::vector<double> locs, masses;
      for (const auto& a : d.atoms()) {
        locs.push_back(a.loc);
        masses.push_back(a.mass);
      }
      j["locs"] = locs;
      j["masses"] = masses;
      break;
    }
    case DensityKind::GeneralSampled: j["kind"] = "general"; break;
  }
  return j;
}

/// A fully resolved scenario: measurements, named states, agents, requests.
struct Scenario {
  std::string version;
  std::uint64_t seed = 0;
  bool seed_provided = false;
  std::uint64_t default_trials = 100000;
  int ambient_dim = 2;
  std::map<std::string, Measurement> measurements;
  std::map<std::string, Vec> states;
  std::map<std::string, Agent> agents;
  std::vector<Json> requests;

  const Measurement& measurement(const std::string& label, const std::string& path) const {
    auto it = measurements.find(label);
    if (it == measurements.end())
      throw SchemaError(path, "unknown measurement label '" + label + "'");
    return it->second;
  }
  const Vec& state(const std::string& label, const std::string& path) const {
    auto it = states.find(label);
    if (it == states.end()) throw SchemaError(path, "unknown state label '" + label + "'");
    return it->second;
  }
  const Agent& agent(const std::string& label, const std::string& path) const {
    auto it = agents.find(label);
    if (it == agents.end()) throw SchemaError(path, "unknown agent id '" + label + "'");
    return it->second;
  }
};

inline Scenario scenario_from_json(const Json& root) {
  Scenario sc;
  sc.version = schema::string_at(schema::field(root, "version", "$"), "$.version");
  if (sc.version != scenario_format_version)
    throw SchemaError("$.version", "unsupported scenario version '" + sc.version + "'");
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      throw SchemaError("$.seed", "expected an integer seed");
    sc.seed = root["seed"].get<std::uint64_t>();
    sc.seed_provided = true;
  }
  if (root.contains("trials")) {
    if (!root["trials"].is_number_unsigned() && !root["trials"].is_number_integer())
      throw SchemaError("$.trials", "expected an integer trial count");
    sc.default_trials = root["trials"].get<std::uint64_t>();
  }
  if (root.contains("space"))
    sc.ambient_dim = static_cast<int>(
        schema::number_at(schema::field(root["space"], "dimension", "$.space"),
                          "$.space.dimension"));

  if (root.contains("measurements")) {
    const Json& ms = root["measurements"];
    if (!ms.is_array()) throw SchemaError("$.measurements", "expected an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string path = "$.measurements[" + std::to_string(i) + "]";
      const Json& mj = ms[i];
      const std::string label =
          schema::string_at(schema::field(mj, "label", path), path + ".label");
      const Json& oj = schema::field(mj, "outcomes", path);
      if (!oj.is_number_integer()) throw SchemaError(path + ".outcomes", "expected an integer");
      const int outcomes = oj.get<int>();
      std::vector<GivensRotation> orientation;
      if (mj.contains("orientation")) {
        const Json& rots = mj["orientation"];
        if (!rots.is_array()) throw SchemaError(path + ".orientation", "expected an array");
        for (std::size_t r = 0; r < rots.size(); ++r) {
          const std::string rp = path + ".orientation[" + std::to_string(r) + "]";
          const auto plane = schema::int_list(schema::field(rots[r], "plane", rp), rp + ".plane");
          if (plane.size() != 2) throw SchemaError(rp + ".plane", "expected two axis indices");
          orientation.push_back(
              {plane[0], plane[1],
               schema::number_at(schema::field(rots[r], "angle", rp), rp + ".angle")});
        }
      }
      MembraneDensity density =
          density_from_json(schema::field(mj, "density", path), path + ".density");
      std::vector<std::vector<int>> groups;
      DegeneracyType type = DegeneracyType::First;
      if (mj.contains("degeneracy")) {
        const Json& dj = mj["degeneracy"];
        const std::string dp = path + ".degeneracy";
        const std::string ts = schema::string_at(schema::field(dj, "type", dp), dp + ".type");
        if (ts == "first")
          type = DegeneracyType::First;
        else if (ts == "second")
          type = DegeneracyType::Second;
        else
          throw SchemaError(dp + ".type", "expected 'first' or 'second'");
        const Json& gj = schema::field(dj, "groups", dp);
        if (!gj.is_array()) throw SchemaError(dp + ".groups", "expected an array of arrays");
        for (std::size_t g = 0; g < gj.size(); ++g)
          groups.push_back(schema::int_list(gj[g], dp + ".groups[" + std::to_string(g) + "]"));
      }
      try {
        Simplex s = Simplex::regular(outcomes, sc.ambient_dim, orientation);
        sc.measurements.emplace(
            label, Measurement(std::move(s), std::move(density), label, std::move(groups), type));
      } catch (const Error& e) {
        throw SchemaError(path, e.what());
      }
    }
  }

  if (root.contains("states")) {
    const Json& ss = root["states"];
    if (!ss.is_array()) throw SchemaError("$.states", "expected an array");
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const std::string path = "$.states[" + std::to_string(i) + "]";
      const Json& sj = ss[i];
      const std::string label =
          schema::string_at(schema::field(sj, "label", path), path + ".label");
      Vec x;
      if (sj.contains("coords")) {
        const auto coords = schema::number_list(sj["coords"], path + ".coords");
        x = Eigen::Map<const Vec>(coords.data(), static_cast<int>(coords.size()));
        if (x.size() != sc.ambient_dim)
          throw SchemaError(path + ".coords", "state dimension does not match the space");
      } else if (sj.contains("vertex")) {
        const Json& vj = sj["vertex"];
        const std::string vm = schema::string_at(schema::field(vj, "measurement", path + ".vertex"),
                                                 path + ".vertex.measurement");
        const Json& oj = schema::field(vj, "outcome", path + ".vertex");
        if (!oj.is_number_integer())
          throw SchemaError(path + ".vertex.outcome", "expected an integer");
        const auto& m = sc.measurement(vm, path + ".vertex.measurement");
        const int o = oj.get<int>();
        if (o < 0 || o >= m.outcome_count())
          throw SchemaError(path + ".vertex.outcome", "outcome index out of range");
        x = m.simplex().vertex(o);
      } else if (sj.contains("barycentric")) {
        const Json& bj = sj["barycentric"];
        const std::string bm = schema::string_at(
            schema::field(bj, "measurement", path + ".barycentric"),
            path + ".barycentric.measurement");
        const auto weights = schema::number_list(schema::field(bj, "weights", path + ".barycentric"),
                                                 path + ".barycentric.weights");
        const auto& m = sc.measurement(bm, path + ".barycentric.measurement");
        if (static_cast<int>(weights.size()) != m.outcome_count())
          throw SchemaError(path + ".barycentric.weights", "weight count mismatch");
        x = m.simplex().point_from_barycentric(
            Eigen::Map<const Vec>(weights.data(), static_cast<int>(weights.size())));
      } else {
        throw SchemaError(path, "state needs 'coords', 'vertex' or 'barycentric'");
      }
      sc.states.emplace(label, std::move(x));
    }
  }

  if (root.contains("agents")) {
    const Json& as = root["agents"];
    if (!as.is_array()) throw SchemaError("$.agents", "expected an array");
    for (std::size_t i = 0; i < as.size(); ++i) {
      const std::string path = "$.agents[" + std::to_string(i) + "]";
      const Json& aj = as[i];
      Agent agent;
      agent.id = schema::string_at(schema::field(aj, "id", path), path + ".id");
      if (aj.contains("densities")) {
        if (!aj["densities"].is_object())
          throw SchemaError(path + ".densities", "expected an object keyed by measurement label");
        for (const auto& [key, dj] : aj["densities"].items())
          agent.densities.emplace(key,
                                  density_from_json(dj, path + ".densities." + key));
      }
      if (aj.contains("update")) {
        const std::string u = schema::string_at(aj["update"], path + ".update");
        if (u == "none")
          agent.strategy = UpdateStrategy::NoUpdate;
        else if (u == "replicability-lock")
          agent.strategy = UpdateStrategy::ReplicabilityLock;
        else
          throw SchemaError(path + ".update", "expected 'none' or 'replicability-lock'");
      }
      sc.agents.emplace(agent.id, std::move(agent));
    }
  }

  const Json& rq = schema::field(root, "requests", "$");
  if (!rq.is_array() || rq.empty()) throw SchemaError("$.requests", "expected a non-empty array");
  for (const auto& r : rq) sc.requests.push_back(r);
  return sc;
}

}  // namespace gtr

#endif  // GTR_SCENARIO_HPP
