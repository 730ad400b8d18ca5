#ifndef GTR_PRESETS_HPP
#define GTR_PRESETS_HPP

#include <string>
#include <vector>

#include "gtr/scenario.hpp"

namespace gtr {

/// Built-in scenario files. Each carries embedded expectation blocks that the
/// runner checks on execution.
inline std::vector<std::string> preset_names() {
  return {"coin-nickel",     "coin-degenerate", "fig2-classical-violation",
          "fig3-nonhilbert", "fig4-replicability", "universal-average",
          "born-check",      "qq-check",        "ensemble-break",
          "bipartite-product"};
}

inline Json preset_scenario(const std::string& name) {
  Json j;
  j["version"] = scenario_format_version;
  j["seed"] = 20240601;

  if (name == "coin-nickel") {
    // Three-outcome coin flip with the measured nickel statistics.
    j["space"] = {{"dimension", 3}};
    j["measurements"] = Json::array({Json{
        {"label", "flip"}, {"outcomes", 3}, {"density", {{"kind", "uniform"}}}}});
    j["states"] = Json::array(
        {Json{{"label", "coin"},
              {"barycentric",
               {{"measurement", "flip"},
                {"weights", Json::array({Json{{"expr", "2999.5/6000"}},
                                         Json{{"expr", "2999.5/6000"}},
                                         Json{{"expr", "1/6000"}}})}}}}});
    j["requests"] = Json::array(
        {Json{{"id", "nickel-exact"},
              {"type", "probabilities"},
              {"measurement", "flip"},
              {"state", "coin"},
              {"monte_carlo", true},
              {"trials", 1000000},
              {"expect",
               {{"values", Json::array({Json{{"expr", "2999.5/6000"}},
                                        Json{{"expr", "2999.5/6000"}},
                                        Json{{"expr", "1/6000"}}})},
                {"tol", 1e-12},
                {"within_sigma", 3.5}}}}});
    return j;
  }

  if (name == "coin-degenerate") {
    // Head and edge become indistinguishable (second-type submeasurement).
    j["space"] = {{"dimension", 3}};
    j["measurements"] = Json::array(
        {Json{{"label", "flip"}, {"outcomes", 3}, {"density", {{"kind", "uniform"}}}},
         Json{{"label", "flip-fused"},
              {"outcomes", 3},
              {"density", {{"kind", "uniform"}}},
              {"degeneracy",
               {{"type", "second"}, {"groups", Json::array({Json::array({0, 2}), Json::array({1})})}}}}});
    j["states"] = Json::array(
        {Json{{"label", "coin"},
              {"barycentric",
               {{"measurement", "flip"},
                {"weights", Json::array({Json{{"expr", "2999.5/6000"}},
                                         Json{{"expr", "2999.5/6000"}},
                                         Json{{"expr", "1/6000"}}})}}}}});
    j["requests"] = Json::array(
        {Json{{"id", "fused-probabilities"},
              {"type", "probabilities"},
              {"measurement", "flip-fused"},
              {"state", "coin"},
              {"monte_carlo", true},
              {"trials", 200000},
              {"expect",
               {{"values", Json::array({Json{{"expr", "3000.5/6000"}},
                                        Json{{"expr", "2999.5/6000"}}})},
                {"tol", 1e-12},
                {"within_sigma", 3.5}}}}});
    return j;
  }

  if (name == "fig2-classical-violation") {
    // Uniform A-band; B-band breakable only on [-eps, eps] with eps < cos(theta).
    j["space"] = {{"dimension", 2}};
    j["measurements"] = Json::array(
        {Json{{"label", "A"}, {"outcomes", 2}, {"density", {{"kind", "uniform"}}}},
         Json{{"label", "B"},
              {"outcomes", 2},
              {"orientation",
               Json::array({Json{{"plane", Json::array({0, 1})}, {"angle", Json{{"expr", "pi/6"}}}}})},
              {"density", {{"kind", "epsilon"}, {"eps", 0.5}}}}});
    j["states"] = Json::array(
        {Json{{"label", "a+"}, {"vertex", {{"measurement", "A"}, {"outcome", 0}}}},
         Json{{"label", "b+"}, {"vertex", {{"measurement", "B"}, {"outcome", 0}}}}});
    j["requests"] = Json::array(
        {Json{{"id", "a-to-b"},
              {"type", "chain"},
              {"steps", Json::array({Json{{"measurement", "B"}, {"outcome", 0}}})},
              {"state", "a+"},
              {"expect", {{"value", 1.0}, {"tol", 1e-12}}}},
         Json{{"id", "b-to-a"},
              {"type", "chain"},
              {"steps", Json::array({Json{{"measurement", "A"}, {"outcome", 0}}})},
              {"state", "b+"},
              {"expect", {{"value", Json{{"expr", "(1 + cos(pi/6))/2"}}}, {"tol", 1e-12}}}},
         Json{{"id", "order-identity"},
              {"type", "commutativity"},
              {"a", "A"},
              {"b", "B"},
              {"expect", {{"identity_residual_below", 1e-12}}}}});
    return j;
  }

  if (name == "fig3-nonhilbert") {
    // Three identical epsilon bands at angles 0, pi/4, pi/2; eps = 1/sqrt(2).
    j["space"] = {{"dimension", 2}};
    const Json eps_density = {{"kind", "epsilon"}, {"eps", Json{{"expr", "1/sqrt(2)"}}}};
    j["measurements"] = Json::array(
        {Json{{"label", "A"}, {"outcomes", 2}, {"density", eps_density}},
         Json{{"label", "C"},
              {"outcomes", 2},
              {"orientation",
               Json::array({Json{{"plane", Json::array({0, 1})}, {"angle", Json{{"expr", "pi/4"}}}}})},
              {"density", eps_density}},
         Json{{"label", "B"},
              {"outcomes", 2},
              {"orientation",
               Json::array({Json{{"plane", Json::array({0, 1})}, {"angle", Json{{"expr", "pi/2"}}}}})},
              {"density", eps_density}}});
    j["states"] = Json::array(
        {Json{{"label", "a+"}, {"vertex", {{"measurement", "A"}, {"outcome", 0}}}},
         Json{{"label", "c+"}, {"vertex", {{"measurement", "C"}, {"outcome", 0}}}}});
    j["requests"] = Json::array(
        {Json{{"id", "c-to-negb"},
              {"type", "chain"},
              {"steps", Json::array({Json{{"measurement", "B"}, {"outcome", 1}}})},
              {"state", "c+"},
              {"expect", {{"value", 0.0}, {"tol", 1e-12}}}},
         Json{{"id", "a-to-negc"},
              {"type", "chain"},
              {"steps", Json::array({Json{{"measurement", "C"}, {"outcome", 1}}})},
              {"state", "a+"},
              {"expect", {{"value", 0.0}, {"tol", 1e-12}}}},
         Json{{"id", "a-to-negb"},
              {"type", "chain"},
              {"steps", Json::array({Json{{"measurement", "B"}, {"outcome", 1}}})},
              {"state", "a+"},
              {"expect", {{"value", 0.5}, {"tol", 1e-12}}}},
         Json{{"id", "witness"},
              {"type", "resolution-witness"},
              {"transitions",
               Json::array({Json{{"measurement", "B"}, {"state", "c+"}, {"outcome", 1}},
                            Json{{"measurement", "C"}, {"state", "a+"}, {"outcome", 1}},
                            Json{{"measurement", "B"}, {"state", "a+"}, {"outcome", 1}}})},
              {"expect", {{"violates", true}}}}});
    return j;
  }

  if (name == "fig4-replicability") {
    // A, B, then A again; the respondent's membranes lock onto each answer.
    j["space"] = {{"dimension", 2}};
    j["measurements"] = Json::array(
        {Json{{"label", "A"},
              {"outcomes", 2},
              {"density", {{"kind", "epsilon"}, {"eps", 0.8}}}},
         Json{{"label", "B"},
              {"outcomes", 2},
              {"orientation",
               Json::array({Json{{"plane", Json::array({0, 1})}, {"angle", Json{{"expr", "pi/2"}}}}})},
              {"density", {{"kind", "epsilon"}, {"eps", 0.8}}}}});
    j["states"] = Json::array({Json{
        {"label", "x0"},
        {"coords", Json::array({Json{{"expr", "cos(0.5)"}}, Json{{"expr", "sqrt(1 - cos(0.5)*cos(0.5))"}}})}}});
    j["agents"] = Json::array({Json{{"id", "respondent"}, {"update", "replicability-lock"}}});
    j["requests"] = Json::array(
        {Json{{"id", "aba"},
              {"type", "run-chain"},
              {"measurements", Json::array({"A", "B", "A"})},
              {"state", "x0"},
              {"agent", "respondent"},
              {"trials", 10000},
              {"expect", {{"replicability", true}}}},
         Json{{"id", "order"},
              {"type", "order-effect"},
              {"a", "A"},
              {"b", "B"},
              {"state", "x0"},
              {"expect", {{"min_difference", 0.05}}}}});
    return j;
  }

  if (name == "universal-average") {
    j["requests"] = Json::array(
        {Json{{"id", "enumerated"},
              {"type", "universal-average"},
              {"mode", "exact"},
              {"cells", Json::array({4, 8, 12, 16})},
              {"cos_theta", Json::array({0.2, 0.4, 0.7})},
              {"expect", {{"max_gap_below", 1e-12}}}},
         Json{{"id", "sampled"},
              {"type", "universal-average"},
              {"mode", "sampled"},
              {"cells", 1000},
              {"membranes", 10000},
              {"cos_theta", Json::array({0.2, 0.4, 0.7})},
              {"expect", {{"within", 0.01}}}},
         Json{{"id", "triangle-cells"},
              {"type", "universal-average"},
              {"mode", "grid3"},
              {"resolution", 4},
              {"membranes", 400},
              {"trials_per_membrane", 250},
              {"expect", {{"within", 0.01}}}}});
    j["space"] = {{"dimension", 2}};
    return j;
  }

  if (name == "born-check") {
    j["requests"] = Json::array({Json{{"id", "born"},
                                      {"type", "born-check"},
                                      {"levels", Json::array({2, 3, 4})},
                                      {"samples", 100},
                                      {"expect", {{"max_error_below", 1e-10}}}}});
    return j;
  }

  if (name == "qq-check") {
    j["requests"] = Json::array({Json{{"id", "qq"},
                                      {"type", "qq-check"},
                                      {"levels", Json::array({2, 3, 4, 6})},
                                      {"samples", 250},
                                      {"expect", {{"max_norm_below", 1e-12}}}}});
    return j;
  }

  if (name == "ensemble-break") {
    // Two minds with different epsilon bands; collective statistics leave the
    // single-epsilon family, and mismatched question membranes give q != 0.
    j["space"] = {{"dimension", 2}};
    j["measurements"] = Json::array(
        {Json{{"label", "A"}, {"outcomes", 2}, {"density", {{"kind", "uniform"}}}},
         Json{{"label", "B"},
              {"outcomes", 2},
              {"orientation", Json::array({Json{{"plane", Json::array({0, 1})},
                                                {"angle", Json{{"expr", "1.2661036727794992"}}}}})},
              {"density", {{"kind", "uniform"}}}}});
    j["states"] = Json::array({Json{
        {"label", "x0"},
        {"coords", Json::array({Json{{"expr", "cos(1.25)"}}, Json{{"expr", "sqrt(1 - cos(1.25)*cos(1.25))"}}})}}});
    j["agents"] = Json::array(
        {Json{{"id", "mind-1"},
              {"densities",
               {{"A", {{"kind", "epsilon"}, {"eps", 0.6}}}, {"B", {{"kind", "epsilon"}, {"eps", 0.9}}}}}},
         Json{{"id", "mind-2"},
              {"densities",
               {{"A", {{"kind", "epsilon"}, {"eps", 0.7}}}, {"B", {{"kind", "epsilon"}, {"eps", 0.8}}}}}}});
    j["requests"] = Json::array(
        {Json{{"id", "two-agent-average"},
              {"type", "ensemble"},
              {"eps", Json::array({0.6, 0.9})},
              {"theta", Json{{"expr", "1.2661036727794992"}}},  // acos(0.3)
              {"theta_a", Json{{"expr", "1.2661036727794992"}}},
              {"expect",
               {{"closed_form_tol", 1e-12}, {"representable", false}, {"residual_above", 1e-10}}}},
         Json{{"id", "identical-agents"},
              {"type", "ensemble"},
              {"eps", Json::array({0.8, 0.8})},
              {"theta", 1.25},
              {"theta_a", 1.3},
              {"expect", {{"closed_form_tol", 1e-12}, {"representable", true}}}},
         Json{{"id", "collective-q"},
              {"type", "ensemble-q"},
              {"a", "A"},
              {"b", "B"},
              {"state", "x0"},
              {"agents", Json::array({"mind-1", "mind-2"})},
              {"expect", {{"abs_q_above", 0.001}}}}});
    return j;
  }

  if (name == "bipartite-product") {
    j["requests"] = Json::array(
        {Json{{"id", "bipartite"},
              {"type", "bipartite"},
              {"pairs", Json::array({Json::array({2, 2}), Json::array({2, 3})})},
              {"samples", 20},
              {"expect",
               {{"product_residual_below", 1e-10}, {"entangled_residual_above", 1e-3}}}}});
    return j;
  }

  fail(errc::unsupported, "unknown preset '" + name + "'");
}

}  // namespace gtr

#endif  // GTR_PRESETS_HPP
