#ifndef GTR_RUNNER_HPP
#define GTR_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gtr/scenario.hpp"

namespace gtr {

/// Execution options shared by the CLI and tests.
struct RunOptions {
  int workers = 1;
  bool trace = false;
  std::uint64_t trace_cap = 1000;  ///< max traced trials per request
};

namespace detail {

// Deterministic parallel Monte Carlo: trial t derives its own RNG stream from
// (seed, request stream, t) and adds into integer tallies. Integer sums are
// order-free, so results are bit-identical for any worker count.
template <typename Fn>
std::vector<std::int64_t> parallel_tally(std::uint64_t trials, std::size_t slots, int workers,
                                         Fn fn) {
  workers = std::max(1, workers);
  std::vector<std::vector<std::int64_t>> partial(
      static_cast<std::size_t>(workers), std::vector<std::int64_t>(slots, 0));
  std::atomic<std::uint64_t> cursor{0};
  auto body = [&](int w) {
    constexpr std::uint64_t chunk = 512;
    for (;;) {
      const std::uint64_t lo = cursor.fetch_add(chunk);
      if (lo >= trials) return;
      const std::uint64_t hi = std::min(trials, lo + chunk);
      for (std::uint64_t t = lo; t < hi; ++t) fn(t, partial[static_cast<std::size_t>(w)]);
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& th : pool) th.join();
  }
  std::vector<std::int64_t> total(slots, 0);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < slots; ++i) total[i] += p[i];
  return total;
}

inline double binomial_sigma(double p, std::uint64_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

}  // namespace detail

/// Collects expectation outcomes across a run.
struct ExpectationLog {
  int checked = 0;
  std::vector<std::string> failures;

  void check(bool ok, const std::string& label) {
    ++checked;
    if (!ok) failures.push_back(label);
  }
  bool passed() const { return failures.empty(); }
};

class ScenarioRunner {
 public:
  ScenarioRunner(const Scenario& sc, RunOptions opts) : sc_(sc), opts_(opts) {}

  Json run() {
    Json results = Json::array();
    for (std::size_t i = 0; i < sc_.requests.size(); ++i)
      results.push_back(run_request(sc_.requests[i], i));
    Json out;
    out["format"] = results_format_version;
    out["generator"] = std::string("gtr ") + build_version;
    out["seed"] = sc_.seed;
    out["results"] = results;
    out["expectations"] = Json{{"checked", log_.checked},
                               {"failed", log_.failures.size()},
                               {"failures", log_.failures}};
    return out;
  }

  const ExpectationLog& expectations() const { return log_; }

 private:
  const Scenario& sc_;
  RunOptions opts_;
  ExpectationLog log_;

  std::uint64_t trials_for(const Json& rj) const {
    if (rj.contains("trials")) return rj["trials"].get<std::uint64_t>();
    return sc_.default_trials;
  }

  static std::string request_id(const Json& rj, std::size_t index) {
    if (rj.contains("id") && rj["id"].is_string()) return rj["id"].get<std::string>();
    return "request-" + std::to_string(index);
  }

  std::uint64_t stream_for(const std::string& id) const {
    return RngStream::hash_name(id.c_str());
  }

  void require_seed(const std::string& id) const {
    if (!sc_.seed_provided)
      throw SchemaError("$.seed", "a seed is mandatory when request '" + id +
                                      "' asks for Monte Carlo sampling");
  }

  Json run_request(const Json& rj, std::size_t index) {
    const std::string id = request_id(rj, index);
    const std::string path = "$.requests[" + std::to_string(index) + "]";
    const std::string type =
        schema::string_at(schema::field(rj, "type", path), path + ".type");
    Json out;
    out["id"] = id;
    out["type"] = type;
    try {
      if (type == "probabilities")
        handle_probabilities(rj, id, path, out);
      else if (type == "chain")
        handle_chain(rj, id, path, out);
      else if (type == "run-chain")
        handle_run_chain(rj, id, path, out);
      else if (type == "order-effect")
        handle_order_effect(rj, id, path, out);
      else if (type == "q-test")
        handle_q_test(rj, id, path, out);
      else if (type == "commutativity")
        handle_commutativity(rj, id, path, out);
      else if (type == "universal-average")
        handle_universal_average(rj, id, path, out);
      else if (type == "ensemble")
        handle_ensemble(rj, id, path, out);
      else if (type == "ensemble-q")
        handle_ensemble_q(rj, id, path, out);
      else if (type == "born-check")
        handle_born_check(rj, id, path, out);
      else if (type == "qq-check")
        handle_qq_check(rj, id, path, out);
      else if (type == "bipartite")
        handle_bipartite(rj, id, path, out);
      else if (type == "resolution-witness")
        handle_resolution_witness(rj, id, path, out);
      else if (type == "product")
        handle_product(rj, id, path, out);
      else
        throw SchemaError(path + ".type", "unknown request type '" + type + "'");
    } catch (const SchemaError&) {
      throw;
    }
    return out;
  }

  // ---- request handlers ----

  void handle_probabilities(const Json& rj, const std::string& id, const std::string& path,
                            Json& out) {
    const auto& m = sc_.measurement(
        schema::string_at(schema::field(rj, "measurement", path), path + ".measurement"), path);
    const Vec& x =
        sc_.state(schema::string_at(schema::field(rj, "state", path), path + ".state"), path);
    const bool exact_kernel = m.density().kind() == DensityKind::Uniform ||
                              (m.density().exact_1d() && m.outcome_count() == 2);
    McConfig cfg;
    if (!exact_kernel) {
      require_seed(id);
      cfg.stream = RngStream(sc_.seed, stream_for(id) ^ 0xe57u);
      cfg.budget = trials_for(rj);
    }
    const Vec p = outcome_probabilities(m, x, cfg);
    if (exact_kernel) {
      out["exact"] = std::vector<double>(p.data(), p.data() + p.size());
      out["tolerance"] = tol::probability;
    } else {
      out["estimate"] = std::vector<double>(p.data(), p.data() + p.size());
      out["method"] = "monte-carlo";
    }

    if (rj.value("monte_carlo", false)) {
      require_seed(id);
      const std::uint64_t n = trials_for(rj);
      const std::uint64_t stream = stream_for(id);
      const auto counts = detail::parallel_tally(
          n, static_cast<std::size_t>(m.group_count()), opts_.workers,
          [&](std::uint64_t t, std::vector<std::int64_t>& tally) {
            RngStream rng(sc_.seed, RngStream::derive(stream, t));
            ++tally[static_cast<std::size_t>(run_measurement(m, x, rng).group)];
          });
      std::vector<double> freq(counts.size()), sigma(counts.size());
      for (std::size_t i = 0; i < counts.size(); ++i) {
        freq[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
        sigma[i] = detail::binomial_sigma(p[static_cast<int>(i)], n);
      }
      out["trials"] = n;
      out["frequencies"] = freq;
      out["std_errors"] = sigma;
    }

    if (rj.contains("expect")) {
      const Json& e = rj["expect"];
      if (e.contains("values")) {
        const auto want = schema::number_list(e["values"], path + ".expect.values");
        const double tol = e.value("tol", tol::probability);
        bool ok = want.size() == static_cast<std::size_t>(p.size());
        for (std::size_t i = 0; ok && i < want.size(); ++i)
          ok = std::abs(want[i] - p[static_cast<int>(i)]) <= tol;
        log_.check(ok, id + ": exact probabilities match expected values");
      }
      if (e.contains("within_sigma") && out.contains("frequencies")) {
        const double k = schema::number_at(e["within_sigma"], path + ".expect.within_sigma");
        bool ok = true;
        for (std::size_t i = 0; i < out["frequencies"].size(); ++i) {
          const double f = out["frequencies"][i].get<double>();
          const double s = out["std_errors"][i].get<double>();
          ok = ok && std::abs(f - p[static_cast<int>(i)]) <= k * s + 1e-9;
        }
        log_.check(ok, id + ": frequencies within " + std::to_string(k) + " sigma");
      }
    }
  }

  std::vector<ChainStep> parse_chain(const Json& rj, const std::string& path) const {
    const Json& steps = schema::field(rj, "steps", path);
    if (!steps.is_array() || steps.empty())
      throw SchemaError(path + ".steps", "expected a non-empty array");
    std::vector<ChainStep> chain;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const std::string sp = path + ".steps[" + std::to_string(i) + "]";
      const auto& m = sc_.measurement(
          schema::string_at(schema::field(steps[i], "measurement", sp), sp + ".measurement"), sp);
      const Json& oj = schema::field(steps[i], "outcome", sp);
      if (!oj.is_number_integer()) throw SchemaError(sp + ".outcome", "expected an integer");
      chain.push_back({m, oj.get<int>()});
    }
    return chain;
  }

  Agent agent_for(const Json& rj, const std::string& path) const {
    if (!rj.contains("agent")) return {};
    return sc_.agent(schema::string_at(rj["agent"], path + ".agent"), path + ".agent");
  }

  void handle_chain(const Json& rj, const std::string& id, const std::string& path, Json& out) {
    const auto chain = parse_chain(rj, path);
    const Vec& x =
        sc_.state(schema::string_at(schema::field(rj, "state", path), path + ".state"), path);
    const double p = sequential_probability(chain, x, agent_for(rj, path));
    out["exact"] = p;
    out["tolerance"] = tol::probability;
    if (rj.contains("expect") && rj["expect"].contains("value")) {
      const double want = schema::number_at(rj["expect"]["value"], path + ".expect.value");
      const double tol = rj["expect"].value("tol", tol::probability);
      log_.check(std::abs(p - want) <= tol, id + ": chain probability matches expected value");
    }
  }

  void handle_run_chain(const Json& rj, const std::string& id, const std::string& path,
                        Json& out) {
    require_seed(id);
    const Json& labels = schema::field(rj, "measurements", path);
    if (!labels.is_array() || labels.empty())
      throw SchemaError(path + ".measurements", "expected a non-empty array of labels");
    std::vector<Measurement> chain;
    for (std::size_t i = 0; i < labels.size(); ++i)
      chain.push_back(sc_.measurement(
          schema::string_at(labels[i], path + ".measurements[" + std::to_string(i) + "]"), path));
    const Vec& x =
        sc_.state(schema::string_at(schema::field(rj, "state", path), path + ".state"), path);
    const Agent agent = agent_for(rj, path);
    const std::uint64_t n = trials_for(rj);
    const std::uint64_t stream = stream_for(id);

    // Tallies: per-step outcome-0 counts, plus matches between last and first
    // same-label steps (response replicability).
    const std::size_t steps = chain.size();
    int repeat_of = -1;  // index of the earlier step with the same label as the last
    for (std::size_t i = 0; i + 1 < steps; ++i)
      if (chain[i].label() == chain.back().label()) {
        repeat_of = static_cast<int>(i);
        break;
      }
    const std::size_t slots = steps + 1;
    const auto counts = detail::parallel_tally(
        n, slots, opts_.workers, [&](std::uint64_t t, std::vector<std::int64_t>& tally) {
          RngStream rng(sc_.seed, RngStream::derive(stream, t));
          const auto recs = run_sequence(chain, x, agent, rng);
          for (std::size_t i = 0; i < steps; ++i)
            if (recs[i].group == 0) ++tally[i];
          if (repeat_of >= 0 &&
              recs.back().group == recs[static_cast<std::size_t>(repeat_of)].group)
            ++tally[steps];
        });

    out["trials"] = n;
    std::vector<double> freq0(steps);
    for (std::size_t i = 0; i < steps; ++i)
      freq0[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    out["outcome0_frequencies"] = freq0;
    if (repeat_of >= 0) {
      out["repeat_matches"] = counts[steps];
      out["repeat_rate"] = static_cast<double>(counts[steps]) / static_cast<double>(n);
    }

    if (opts_.trace) {
      Json trace = Json::array();
      const std::uint64_t cap = std::min<std::uint64_t>(n, opts_.trace_cap);
      for (std::uint64_t t = 0; t < cap; ++t) {
        RngStream rng(sc_.seed, RngStream::derive(stream, t));
        const auto recs = run_sequence(chain, x, agent, rng, true);
        Json tj = Json::array();
        for (const auto& rec : recs) {
          Json step;
          step["group"] = rec.group;
          step["final_state"] =
              std::vector<double>(rec.final_state.data(),
                                  rec.final_state.data() + rec.final_state.size());
          step["on_membrane"] = std::vector<double>(
              rec.state_on_membrane.data(),
              rec.state_on_membrane.data() + rec.state_on_membrane.size());
          tj.push_back(step);
        }
        trace.push_back(tj);
      }
      out["trace"] = trace;
      out["trace_truncated"] = cap < n;
    }

    if (rj.contains("expect")) {
      const Json& e = rj["expect"];
      if (e.contains("replicability") && e["replicability"].get<bool>()) {
        const bool ok = repeat_of >= 0 && counts[steps] == static_cast<std::int64_t>(n);
        log_.check(ok, id + ": repeated measurement reproduces its first outcome in " +
                           std::to_string(n) + "/" + std::to_string(n) + " trials");
      }
      if (e.contains("repeat_rate_below")) {
        const double bound = schema::number_at(e["repeat_rate_below"], path + ".expect");
        const bool ok =
            repeat_of >= 0 && static_cast<double>(counts[steps]) / static_cast<double>(n) < bound;
        log_.check(ok, id + ": repeat rate below " + std::to_string(bound));
      }
    }
  }

  void handle_order_effect(const Json& rj, const std::string& id, const std::string& path,
                           Json& out) {
    const auto& a = sc_.measurement(
        schema::string_at(schema::field(rj, "a", path), path + ".a"), path);
    const auto& b = sc_.measurement(
        schema::string_at(schema::field(rj, "b", path), path + ".b"), path);
    const Vec& x =
        sc_.state(schema::string_at(schema::field(rj, "state", path), path + ".state"), path);
    const Agent agent = agent_for(rj, path);
    const std::vector<ChainStep> ab = {{a, 0}, {b, 0}};
    const std::vector<ChainStep> ba = {{b, 0}, {a, 0}};
    const double p_ab = sequential_probability(ab, x, agent);
    const double p_ba = sequential_probability(ba, x, agent);
    out["p_ab"] = p_ab;
    out["p_ba"] = p_ba;
    out["difference"] = p_ab - p_ba;
    if (rj.contains("expect") && rj["expect"].contains("min_difference")) {
      const double want = schema::number_at(rj["expect"]["min_difference"], path + ".expect");
      log_.check(std::abs(p_ab - p_ba) >= want,
                 id + ": question order effect of at least " + std::to_string(want));
    }
  }

  void handle_q_test(const Json& rj, const std::string& id, const std::string& path, Json& out) {
    const auto& a = sc_.measurement(
        schema::string_at(schema::field(rj, "a", path), path + ".a"), path);
    const auto& b = sc_.measurement(
        schema::string_at(schema::field(rj, "b", path), path + ".b"), path);
    const Vec& x =
        sc_.state(schema::string_at(schema::field(rj, "state", path), path + ".state"), path);
    QReport rep;
    if (rj.value("monte_carlo", false)) {
      require_seed(id);
      rep = q_test_monte_carlo(a, b, x, trials_for(rj), sc_.seed ^ stream_for(id));
      out["sigma_q"] = rep.sigma_q;
      out["sigma_q1"] = rep.sigma_q1;
      out["sigma_q2"] = rep.sigma_q2;
      out["method"] = "monte-carlo";
    } else {
      rep = q_test(a, b, x);
      out["method"] = "exact";
      out["tolerance"] = tol::probability;
    }
    out["q"] = rep.q;
    out["q1"] = rep.q1;
    out["q2"] = rep.q2;
    out["chains"] = std::vector<double>(rep.chains.begin(), rep.chains.end());
    out["transitions"] = std::vector<double>(rep.transitions.begin(), rep.transitions.end());
    if (rep.symmetric_pair) out["q1_integral"] = rep.q1_integral;
    if (rj.contains("expect")) {
      const Json& e = rj["expect"];
      if (e.contains("q")) {
        const double want = schema::number_at(e["q"], path + ".expect.q");
        const double tol = e.value("tol", tol::probability);
        log_.check(std::abs(rep.q - want) <= tol, id + ": q matches expected value");
      }
      if (e.contains("q1")) {
        const double want = schema::number_at(e["q1"], path + ".expect.q1");
        const double tol = e.value("tol", tol::probability);
        log_.check(std::abs(rep.q1 - want) <= tol, id + ": q1 matches expected value");
      }
      if (e.contains("abs_q_above"))
        log_.check(std::abs(rep.q) >
                       schema::number_at(e["abs_q_above"], path + ".expect.abs_q_above"),
                   id + ": |q| exceeds threshold");
    }
  }

  void handle_commutativity(const Json& rj, const std::string& id, const std::string& path,
                            Json& out) {
    const auto& a = sc_.measurement(
        schema::string_at(schema::field(rj, "a", path), path + ".a"), path);
    const auto& b = sc_.measurement(
        schema::string_at(schema::field(rj, "b", path), path + ".b"), path);
    const auto rep = classical_commutativity(a, b);
    out["p_b_then_a"] = rep.p_b_then_a;
    out["p_a_then_b"] = rep.p_a_then_b;
    out["commutator"] = rep.commutator;
    out["rhs_product"] = rep.rhs_product;
    out["identity_residual"] = rep.identity_residual;
    out["kolmogorovian_compatible"] = rep.kolmogorovian_compatible;
    out["tolerance"] = tol::probability;
    if (rj.contains("expect")) {
      const Json& e = rj["expect"];
      if (e.contains("commutator")) {
        const double want = schema::number_at(e["commutator"], path + ".expect.commutator");
        const double tol = e.value("tol", 1e-12);
        log_.check(std::abs(rep.commutator - want) <= tol, id + ": commutator matches");
      }
      if (e.contains("identity_residual_below"))
        log_.check(rep.identity_residual <
                       schema::number_at(e["identity_residual_below"], path + ".expect"),
                   id + ": order-effect identity holds");
    }
  }

  void handle_universal_average(const Json& rj, const std::string& id, const std::string& path,
                                Json& out) {
    const std::string mode = rj.value("mode", std::string("exact"));
    if (mode == "exact") {
      const auto cells = schema::int_list(schema::field(rj, "cells", path), path + ".cells");
      const auto cos_thetas =
          schema::number_list(schema::field(rj, "cos_theta", path), path + ".cos_theta");
      const auto study = universal_average_study(cos_thetas, cells);
      Json rows = Json::array();
      double max_gap = 0.0;
      for (const auto& row : study.rows) {
        rows.push_back(Json{{"cos_theta", row.cos_theta},
                            {"cells", row.cells},
                            {"average", row.average},
                            {"uniform_value", row.uniform_value},
                            {"gap", row.gap},
                            {"mean_abs_dev", row.mean_abs_dev}});
        max_gap = std::max(max_gap, row.gap);
      }
      out["rows"] = rows;
      out["monotone"] = study.monotone;
      out["endpoint_strict"] = study.endpoint_strict;
      out["max_gap"] = max_gap;
      if (rj.contains("expect")) {
        const Json& e = rj["expect"];
        if (e.contains("max_gap_below"))
          log_.check(max_gap < schema::number_at(e["max_gap_below"], path + ".expect"),
                     id + ": enumeration averages sit at the uniform value");
        if (e.contains("endpoint_strict"))
          log_.check(study.endpoint_strict == e["endpoint_strict"].get<bool>(),
                     id + ": endpoint gap comparison");
      }
    } else if (mode == "sampled") {
      require_seed(id);
      const int cells = schema::field(rj, "cells", path).get<int>();
      const std::uint64_t membranes = rj.value("membranes", std::uint64_t{10000});
      const auto cos_thetas =
          schema::number_list(schema::field(rj, "cos_theta", path), path + ".cos_theta");
      Json rows = Json::array();
      bool all_within = true;
      const double bound = rj.contains("expect") && rj["expect"].contains("within")
                               ? schema::number_at(rj["expect"]["within"], path + ".expect.within")
                               : 0.01;
      for (std::size_t i = 0; i < cos_thetas.size(); ++i) {
        const auto res = universal_average_sampled(
            cells, membranes, cos_thetas[i],
            RngStream(sc_.seed, RngStream::derive(stream_for(id), i)));
        const double uniform_value = 0.5 * (1.0 + cos_thetas[i]);
        rows.push_back(Json{{"cos_theta", cos_thetas[i]},
                            {"cells", cells},
                            {"mean", res.mean},
                            {"std_error", res.std_error},
                            {"uniform_value", uniform_value}});
        all_within = all_within && std::abs(res.mean - uniform_value) < bound;
      }
      out["rows"] = rows;
      out["membranes"] = membranes;
      if (rj.contains("expect") && rj["expect"].contains("within"))
        log_.check(all_within, id + ": sampled averages within " + std::to_string(bound) +
                                   " of the uniform answer");
    } else if (mode == "grid3") {
      require_seed(id);
      const int resolution = rj.value("resolution", 4);
      const std::uint64_t membranes = rj.value("membranes", std::uint64_t{400});
      const std::uint64_t per = rj.value("trials_per_membrane", std::uint64_t{250});
      const Simplex s = Simplex::regular(3, std::max(2, sc_.ambient_dim));
      const Vec centroid = Vec::Zero(s.ambient_dim());
      Json rows = Json::array();
      bool all_within = true;
      const double bound = rj.contains("expect") && rj["expect"].contains("within")
                               ? schema::number_at(rj["expect"]["within"], path + ".expect.within")
                               : 0.01;
      for (int outcome = 0; outcome < 3; ++outcome) {
        const auto res = universal_average_grid3(
            s, centroid, outcome, resolution, membranes, per,
            RngStream(sc_.seed, RngStream::derive(stream_for(id), outcome)));
        rows.push_back(Json{{"outcome", outcome},
                            {"mean", res.mean},
                            {"std_error", res.std_error},
                            {"uniform_value", 1.0 / 3.0}});
        all_within = all_within && std::abs(res.mean - 1.0 / 3.0) < bound;
      }
      out["rows"] = rows;
      if (rj.contains("expect") && rj["expect"].contains("within"))
        log_.check(all_within,
                   id + ": grid-cell averages within " + std::to_string(bound) + " of uniform");
    } else {
      throw SchemaError(path + ".mode", "expected 'exact', 'sampled' or 'grid3'");
    }
  }

  void handle_ensemble(const Json& rj, const std::string& id, const std::string& path, Json& out) {
    const auto eps = schema::number_list(schema::field(rj, "eps", path), path + ".eps");
    const double theta = schema::number_at(schema::field(rj, "theta", path), path + ".theta");
    const double theta_a =
        schema::number_at(schema::field(rj, "theta_a", path), path + ".theta_a");
    const auto st = ensemble_symmetry_study(eps, theta, theta_a);
    out["collective_probability"] = st.collective_probability;
    out["closed_form"] = st.closed_form;
    out["k1"] = st.k1;
    out["k2"] = st.k2;
    out["best_single_eps"] = st.best_single_eps;
    out["representability_residual"] = st.representability_residual;
    out["single_eps_representable"] = st.single_eps_representable;
    out["collective_q"] = st.collective_q;
    if (rj.contains("expect")) {
      const Json& e = rj["expect"];
      if (e.contains("closed_form_tol"))
        log_.check(std::abs(st.collective_probability - st.closed_form) <=
                       schema::number_at(e["closed_form_tol"], path + ".expect"),
                   id + ": collective probability matches the closed form");
      if (e.contains("representable"))
        log_.check(st.single_eps_representable == e["representable"].get<bool>(),
                   id + ": single-epsilon representability verdict");
      if (e.contains("residual_above"))
        log_.check(st.representability_residual >
                       schema::number_at(e["residual_above"], path + ".expect"),
                   id + ": representability residual is positive");
    }
  }

  void handle_ensemble_q(const Json& rj, const std::string& id, const std::string& path,
                         Json& out) {
    const auto& a = sc_.measurement(
        schema::string_at(schema::field(rj, "a", path), path + ".a"), path);
    const auto& b = sc_.measurement(
        schema::string_at(schema::field(rj, "b", path), path + ".b"), path);
    const Vec& x =
        sc_.state(schema::string_at(schema::field(rj, "state", path), path + ".state"), path);
    const Json& ids = schema::field(rj, "agents", path);
    if (!ids.is_array() || ids.empty())
      throw SchemaError(path + ".agents", "expected a non-empty array of agent ids");
    std::vector<Agent> agents;
    for (std::size_t i = 0; i < ids.size(); ++i)
      agents.push_back(
          sc_.agent(schema::string_at(ids[i], path + ".agents[" + std::to_string(i) + "]"), path));
    const double q = ensemble_q(a, b, x, agents);
    out["collective_q"] = q;
    if (rj.contains("expect") && rj["expect"].contains("abs_q_above"))
      log_.check(std::abs(q) > schema::number_at(rj["expect"]["abs_q_above"], path + ".expect"),
                 id + ": collective q is nonzero");
  }

  void handle_born_check(const Json& rj, const std::string& id, const std::string& path,
                         Json& out) {
    require_seed(id);
    const auto levels = schema::int_list(schema::field(rj, "levels", path), path + ".levels");
    const int samples = rj.value("samples", 100);
    const std::uint64_t stream = stream_for(id);
    double worst = 0.0;
    Json per_level = Json::array();
    for (int n : levels) {
      const auto basis = GeneratorBasis::gell_mann(n);
      RngStream rng(sc_.seed, RngStream::derive(stream, static_cast<std::uint64_t>(n)));
      double level_worst = 0.0;
      for (int k = 0; k < samples; ++k) {
        const auto ps = random_eigenprojectors(n, rng);
        const Simplex s = eigen_simplex(ps, basis);
        const CMat d = (k % 2 == 0) ? random_pure_state(n, rng) : random_mixed_state(n, rng);
        const Vec born = born_probabilities(d, ps);
        const Vec gtr_probs = s.barycentric(s.project_onto(to_bloch(d, basis)));
        level_worst = std::max(level_worst, (gtr_probs - born).cwiseAbs().maxCoeff());
      }
      per_level.push_back(Json{{"levels", n}, {"max_error", level_worst}});
      worst = std::max(worst, level_worst);
    }
    out["per_level"] = per_level;
    out["max_error"] = worst;
    out["samples"] = samples;
    if (rj.contains("expect") && rj["expect"].contains("max_error_below"))
      log_.check(worst < schema::number_at(rj["expect"]["max_error_below"], path + ".expect"),
                 id + ": uniform-membrane statistics equal the Born rule");
  }

  void handle_qq_check(const Json& rj, const std::string& id, const std::string& path, Json& out) {
    require_seed(id);
    const auto levels = schema::int_list(schema::field(rj, "levels", path), path + ".levels");
    const int samples = rj.value("samples", 250);
    const std::uint64_t stream = stream_for(id);
    double worst = 0.0;
    for (int n : levels) {
      RngStream rng(sc_.seed, RngStream::derive(stream, static_cast<std::uint64_t>(n)));
      for (int k = 0; k < samples; ++k) {
        const int ra = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
        const int rb = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
        const CMat pa = random_projector(n, ra, rng);
        const CMat pb = random_projector(n, rb, rng);
        worst = std::max(worst, qq_operator(pa, pb).cwiseAbs().maxCoeff());
      }
    }
    out["max_operator_norm"] = worst;
    out["samples_per_level"] = samples;
    if (rj.contains("expect") && rj["expect"].contains("max_norm_below"))
      log_.check(worst < schema::number_at(rj["expect"]["max_norm_below"], path + ".expect"),
                 id + ": QQ operator vanishes");
  }

  void handle_bipartite(const Json& rj, const std::string& id, const std::string& path,
                        Json& out) {
    require_seed(id);
    const Json& pairs = schema::field(rj, "pairs", path);
    if (!pairs.is_array()) throw SchemaError(path + ".pairs", "expected an array of [na, nb]");
    const int samples = rj.value("samples", 20);
    const std::uint64_t stream = stream_for(id);
    double worst_product = 0.0;
    double best_entangled = 1e9;
    Json rows = Json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto nm = schema::int_list(pairs[i], path + ".pairs[" + std::to_string(i) + "]");
      if (nm.size() != 2) throw SchemaError(path + ".pairs", "each pair must be [na, nb]");
      const int na = nm[0], nb = nm[1];
      RngStream rng(sc_.seed, RngStream::derive(stream, i));
      double prod_res = 0.0;
      for (int k = 0; k < samples; ++k) {
        const CMat d =
            GeneratorBasis::kron(random_mixed_state(na, rng), random_pure_state(nb, rng));
        const auto dec = bipartite_decompose(d, na, nb);
        prod_res = std::max(prod_res, std::max(dec.product_residual, dec.block_residual));
      }
      worst_product = std::max(worst_product, prod_res);
      // Entangled witnesses: random pure states of the joint system.
      double ent_res = 1e9;
      for (int k = 0; k < samples; ++k) {
        const auto dec = bipartite_decompose(random_pure_state(na * nb, rng), na, nb);
        ent_res = std::min(ent_res, dec.product_residual);
      }
      best_entangled = std::min(best_entangled, ent_res);
      rows.push_back(Json{{"na", na},
                          {"nb", nb},
                          {"max_product_residual", prod_res},
                          {"min_entangled_residual", ent_res},
                          {"d_a", std::sqrt((na - 1.0) / (na * nb - 1.0))},
                          {"d_b", std::sqrt((nb - 1.0) / (na * nb - 1.0))}});
    }
    out["rows"] = rows;
    out["max_product_residual"] = worst_product;
    out["min_entangled_residual"] = best_entangled;
    if (rj.contains("expect")) {
      const Json& e = rj["expect"];
      if (e.contains("product_residual_below"))
        log_.check(worst_product <
                       schema::number_at(e["product_residual_below"], path + ".expect"),
                   id + ": product states reconstruct from subsystem vectors");
      if (e.contains("entangled_residual_above"))
        log_.check(best_entangled >
                       schema::number_at(e["entangled_residual_above"], path + ".expect"),
                   id + ": entangled states are not product-reconstructible");
    }
  }

  void handle_resolution_witness(const Json& rj, const std::string& id, const std::string& path,
                                 Json& out) {
    const Json& chains = schema::field(rj, "transitions", path);
    if (!chains.is_array() || chains.size() != 3)
      throw SchemaError(path + ".transitions",
                        "expected the three transitions [c->-b, a->-c, a->-b]");
    double p[3];
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string tp = path + ".transitions[" + std::to_string(i) + "]";
      const auto& m = sc_.measurement(
          schema::string_at(schema::field(chains[i], "measurement", tp), tp + ".measurement"), tp);
      const Vec& x = sc_.state(
          schema::string_at(schema::field(chains[i], "state", tp), tp + ".state"), tp);
      const Json& oj = schema::field(chains[i], "outcome", tp);
      if (!oj.is_number_integer()) throw SchemaError(tp + ".outcome", "expected an integer");
      p[i] = outcome_probabilities(m, x)[oj.get<int>()];
    }
    const auto w = resolution_identity_witness(p[0], p[1], p[2]);
    out["p_c_negb"] = p[0];
    out["p_a_negc"] = p[1];
    out["p_a_negb"] = p[2];
    out["hilbert_bound"] = w.bound;
    out["violates_hilbert_bound"] = w.violates;
    if (rj.contains("expect") && rj["expect"].contains("violates"))
      log_.check(w.violates == rj["expect"]["violates"].get<bool>(),
                 id + ": resolution-of-identity witness verdict");
  }

  void handle_product(const Json& rj, const std::string& id, const std::string& path, Json& out) {
    const auto& a = sc_.measurement(
        schema::string_at(schema::field(rj, "a", path), path + ".a"), path);
    const auto& b = sc_.measurement(
        schema::string_at(schema::field(rj, "b", path), path + ".b"), path);
    const Vec& xa =
        sc_.state(schema::string_at(schema::field(rj, "state_a", path), path + ".state_a"), path);
    const Vec& xb =
        sc_.state(schema::string_at(schema::field(rj, "state_b", path), path + ".state_b"), path);
    const ProductMeasurement joint(a, b);
    const Vec p = joint.joint_probabilities(xa, xb);
    out["joint_exact"] = std::vector<double>(p.data(), p.data() + p.size());

    if (rj.value("monte_carlo", false)) {
      require_seed(id);
      const std::uint64_t n = trials_for(rj);
      const std::uint64_t stream = stream_for(id);
      const std::size_t slots = static_cast<std::size_t>(joint.outcome_count());
      // Run the sequence both ways with the same per-trial streams.
      const auto counts_ab = detail::parallel_tally(
          n, slots, opts_.workers, [&](std::uint64_t t, std::vector<std::int64_t>& tally) {
            RngStream rng(sc_.seed, RngStream::derive(stream, t));
            const auto [ra, rb] = joint.run(xa, xb, rng, false);
            ++tally[static_cast<std::size_t>(joint.joint_index(ra.group, rb.group))];
          });
      const auto counts_ba = detail::parallel_tally(
          n, slots, opts_.workers, [&](std::uint64_t t, std::vector<std::int64_t>& tally) {
            RngStream rng(sc_.seed, RngStream::derive(stream ^ 0x5a5a5a5au, t));
            const auto [ra, rb] = joint.run(xa, xb, rng, true);
            ++tally[static_cast<std::size_t>(joint.joint_index(ra.group, rb.group))];
          });
      std::vector<double> fab(slots), fba(slots);
      double worst_sigma_units = 0.0;
      for (std::size_t i = 0; i < slots; ++i) {
        fab[i] = static_cast<double>(counts_ab[i]) / static_cast<double>(n);
        fba[i] = static_cast<double>(counts_ba[i]) / static_cast<double>(n);
        const double sigma = detail::binomial_sigma(p[static_cast<int>(i)], n) + 1e-12;
        worst_sigma_units = std::max({worst_sigma_units, std::abs(fab[i] - p[static_cast<int>(i)]) / sigma,
                                      std::abs(fba[i] - p[static_cast<int>(i)]) / sigma});
      }
      out["trials"] = n;
      out["frequencies_ab"] = fab;
      out["frequencies_ba"] = fba;
      out["worst_sigma_units"] = worst_sigma_units;
      if (rj.contains("expect") && rj["expect"].contains("within_sigma"))
        log_.check(worst_sigma_units <=
                       schema::number_at(rj["expect"]["within_sigma"], path + ".expect"),
                   id + ": both execution orders match the factorized law");
    }

    if (rj.contains("expect") && rj["expect"].contains("joint")) {
      const auto want = schema::number_list(rj["expect"]["joint"], path + ".expect.joint");
      const double tol = rj["expect"].value("tol", tol::probability);
      bool ok = want.size() == static_cast<std::size_t>(p.size());
      for (std::size_t i = 0; ok && i < want.size(); ++i)
        ok = std::abs(want[i] - p[static_cast<int>(i)]) <= tol;
      log_.check(ok, id + ": joint distribution factorizes as expected");
    }
  }
};

/// Canonical serialization: sorted keys (nlohmann objects are ordered maps),
/// two-space indent, one trailing newline. Byte-identical for identical
/// scenario + seed, whatever the worker count.
inline std::string canonical_json_text(const Json& j) { return j.dump(2) + "\n"; }

/// Flat CSV view of a result document: one row per scalar metric.
inline std::string results_to_csv(const Json& results) {
  std::string csv = "schema,request,type,metric,index,value\n";
  char buf[64];
  const auto emit = [&](const std::string& id, const std::string& type, const std::string& metric,
                        int index, double value) {
    std::snprintf(buf, sizeof buf, "%.17g", value);
    csv += "gtr-csv-1," + id + "," + type + "," + metric + "," +
           (index < 0 ? std::string("") : std::to_string(index)) + "," + buf + "\n";
  };
  for (const auto& r : results.at("results")) {
    const std::string id = r.value("id", "");
    const std::string type = r.value("type", "");
    for (const auto& [key, value] : r.items()) {
      if (key == "id" || key == "type" || key == "trace") continue;
      if (value.is_number()) {
        emit(id, type, key, -1, value.get<double>());
      } else if (value.is_boolean()) {
        emit(id, type, key, -1, value.get<bool>() ? 1.0 : 0.0);
      } else if (value.is_array() && !value.empty() && value[0].is_number()) {
        for (std::size_t i = 0; i < value.size(); ++i)
          if (value[i].is_number()) emit(id, type, key, static_cast<int>(i), value[i].get<double>());
      }
    }
  }
  return csv;
}

}  // namespace gtr

#endif  // GTR_RUNNER_HPP
