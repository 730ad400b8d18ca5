#ifndef GTR_DIAGNOSTICS_HPP
#define GTR_DIAGNOSTICS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gtr/constants.hpp"
#include "gtr/density.hpp"
#include "gtr/engine.hpp"
#include "gtr/error.hpp"
#include "gtr/geometry.hpp"
#include "gtr/rng.hpp"

namespace gtr {

namespace detail {

inline void require_two_outcome_pair(const Measurement& a, const Measurement& b) {
  require(a.outcome_count() == 2 && b.outcome_count() == 2 && a.non_degenerate() &&
              b.non_degenerate(),
          errc::invalid_measurement, "diagnostic requires two two-outcome measurements");
}

// One-step transition probability to outcome 0 of m, starting from state x.
inline double transition0(const Measurement& m, const Vec& x) {
  return outcome_probabilities(m, x)[0];
}

inline double integral_above(const MembraneDensity& d, double t) {
  return d.total_mass() - d.mass_strictly_below(t) - d.atom_at(t);
}

}  // namespace detail

/// The q-test: the four-chain combination that vanishes identically in any
/// Hilbertian model, split into the relative-indeterminism part q1 and the
/// relative-asymmetry part q2 (q = q1 + q2).
struct QReport {
  double q = 0.0, q1 = 0.0, q2 = 0.0;
  // One-step transitions: x->a, a->-b, x->-a, -a->b, x->b, b->-a, x->-b, -b->a.
  std::array<double, 8> transitions{};
  // Chained probabilities: ->a->-b, ->-a->b, ->b->-a, ->-b->a (from x).
  std::array<double, 4> chains{};
  bool exact = true;
  double sigma_q = 0.0, sigma_q1 = 0.0, sigma_q2 = 0.0;
  bool symmetric_pair = false;  ///< both densities mirror-symmetric
  double q1_integral = 0.0;     ///< the closed-form integral of rho_B - rho_A
                                ///< above cos(theta); valid for symmetric pairs
};

namespace detail {

inline QReport assemble_q(const std::array<double, 8>& t) {
  QReport rep;
  rep.transitions = t;
  rep.chains = {t[0] * t[1], t[2] * t[3], t[4] * t[5], t[6] * t[7]};
  rep.q = (rep.chains[0] + rep.chains[1]) - (rep.chains[2] + rep.chains[3]);
  rep.q1 = t[3] - t[7];
  rep.q2 = t[0] * (t[1] - t[3]) + t[4] * (t[7] - t[5]);
  return rep;
}

}  // namespace detail

/// Exact q-test for two two-outcome measurements and an initial state x.
inline QReport q_test(const Measurement& a, const Measurement& b, const Vec& x) {
  detail::require_two_outcome_pair(a, b);
  const Vec va = a.simplex().vertex(0), vna = a.simplex().vertex(1);
  const Vec vb = b.simplex().vertex(0), vnb = b.simplex().vertex(1);
  const double pxa = detail::transition0(a, x);
  const double pxb = detail::transition0(b, x);
  const std::array<double, 8> t = {
      pxa,       1.0 - detail::transition0(b, va),  // x->a, a->-b
      1.0 - pxa, detail::transition0(b, vna),       // x->-a, -a->b
      pxb,       1.0 - detail::transition0(a, vb),  // x->b, b->-a
      1.0 - pxb, detail::transition0(a, vnb),       // x->-b, -b->a
  };
  QReport rep = detail::assemble_q(t);
  rep.exact = a.density().exact_1d() && b.density().exact_1d();

  if (a.density().symmetric_1d() && b.density().symmetric_1d()) {
    rep.symmetric_pair = true;
    const double cos_theta = a.simplex().vertex(0).dot(b.simplex().vertex(0));
    rep.q1_integral = detail::integral_above(b.density(), cos_theta) -
                      detail::integral_above(a.density(), cos_theta);
  }
  return rep;
}

/// Monte Carlo q-test: estimates the six one-step transitions by sampling
/// collapses and propagates binomial standard errors into q, q1 and q2.
inline QReport q_test_monte_carlo(const Measurement& a, const Measurement& b, const Vec& x,
                                  std::uint64_t trials, std::uint64_t seed) {
  detail::require_two_outcome_pair(a, b);
  const Vec states[6] = {x, x, a.simplex().vertex(0), a.simplex().vertex(1),
                         b.simplex().vertex(0), b.simplex().vertex(1)};
  const Measurement* meas[6] = {&a, &b, &b, &b, &a, &a};
  double p[6], var[6];
  for (int k = 0; k < 6; ++k) {
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
      RngStream rng(seed, RngStream::derive(k, i));
      hits += run_measurement(*meas[k], states[k], rng).group == 0 ? 1 : 0;
    }
    p[k] = static_cast<double>(hits) / static_cast<double>(trials);
    var[k] = p[k] * (1.0 - p[k]) / static_cast<double>(trials);
  }
  // Transition estimates: p = (x->a, x->b, a->b, -a->b, b->a, -b->a).
  const std::array<double, 8> t = {p[0], 1.0 - p[2], 1.0 - p[0], p[3],
                                   p[1], 1.0 - p[4], 1.0 - p[1], p[5]};
  QReport rep = detail::assemble_q(t);
  rep.exact = false;
  // Gradients of q w.r.t. the six independent estimates above.
  const double dq[6] = {t[1] - t[3], t[7] - t[5], -t[0], 1.0 - t[0], t[4], -(1.0 - t[4])};
  double vq = 0.0;
  for (int k = 0; k < 6; ++k) vq += dq[k] * dq[k] * var[k];
  rep.sigma_q = std::sqrt(vq);
  rep.sigma_q1 = std::sqrt(var[3] + var[5]);
  // q2 = q - q1; combine conservatively.
  rep.sigma_q2 = std::sqrt(vq + var[3] + var[5]);
  rep.symmetric_pair = a.density().symmetric_1d() && b.density().symmetric_1d();
  if (rep.symmetric_pair) {
    const double cos_theta = a.simplex().vertex(0).dot(b.simplex().vertex(0));
    rep.q1_integral = detail::integral_above(b.density(), cos_theta) -
                      detail::integral_above(a.density(), cos_theta);
  }
  return rep;
}

/// Both sides of the classical-commutativity identity from eigenstate b:
/// P(->b->a|b) - P(->a->b|b) = P(b->a)[1 - P(a->b)]. A nonzero commutator
/// rules out a single Kolmogorovian sample space for the two questions.
struct CommutativityReport {
  double p_b_then_a = 0.0;  ///< P(->b->a|b)
  double p_a_then_b = 0.0;  ///< P(->a->b|b)
  double commutator = 0.0;
  double rhs_product = 0.0;  ///< P(b->a)[1 - P(a->b)]
  double identity_residual = 0.0;
  bool kolmogorovian_compatible = false;
};

inline CommutativityReport classical_commutativity(const Measurement& a, const Measurement& b) {
  detail::require_two_outcome_pair(a, b);
  const Vec x0 = b.simplex().vertex(0);
  const std::vector<ChainStep> b_then_a = {{b, 0}, {a, 0}};
  const std::vector<ChainStep> a_then_b = {{a, 0}, {b, 0}};
  CommutativityReport rep;
  rep.p_b_then_a = sequential_probability(b_then_a, x0);
  rep.p_a_then_b = sequential_probability(a_then_b, x0);
  rep.commutator = rep.p_b_then_a - rep.p_a_then_b;
  const double p_ba = detail::transition0(a, x0);
  const double p_ab = detail::transition0(b, a.simplex().vertex(0));
  rep.rhs_product = p_ba * (1.0 - p_ab);
  rep.identity_residual = std::abs(rep.commutator - rep.rhs_product);
  rep.kolmogorovian_compatible = std::abs(rep.commutator) < tol::probability;
  return rep;
}

/// Convergence table of the cellular average toward the uniform answer.
struct UniversalAverageRow {
  double cos_theta = 0.0;
  int cells = 0;
  double average = 0.0;        ///< exact <P>_n for the outcome at +1
  double uniform_value = 0.0;  ///< (1 + cos_theta) / 2
  double gap = 0.0;
  double mean_abs_dev = 0.0;   ///< spread of the per-membrane probabilities
};

struct UniversalAverageStudy {
  std::vector<UniversalAverageRow> rows;
  bool monotone = true;         ///< gap non-increasing along the n grid
  bool endpoint_strict = true;  ///< gap at the largest n strictly below the smallest n
};

inline UniversalAverageStudy universal_average_study(std::span<const double> cos_thetas,
                                                     std::span<const int> n_values) {
  UniversalAverageStudy study;
  for (double c : cos_thetas) {
    double first_gap = -1.0, prev_gap = -1.0, last_gap = -1.0;
    for (int n : n_values) {
      UniversalAverageRow row;
      row.cos_theta = c;
      row.cells = n;
      const auto stats = cellular_average_stats(n, c);
      row.average = stats.mean;
      row.mean_abs_dev = stats.mean_abs_dev;
      row.uniform_value = 0.5 * (1.0 + c);
      row.gap = std::abs(row.average - row.uniform_value);
      if (prev_gap >= 0.0 && row.gap > prev_gap + 1e-15) study.monotone = false;
      if (first_gap < 0.0) first_gap = row.gap;
      prev_gap = row.gap;
      last_gap = row.gap;
      study.rows.push_back(row);
    }
    if (!(last_gap < first_gap)) study.endpoint_strict = false;
  }
  return study;
}

struct SampledAverageResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t membranes = 0;
};

/// Sampled universal average for large cell counts: random cellular membranes
/// (uniform over non-empty breakable subsets), exact per-membrane probability.
inline SampledAverageResult universal_average_sampled(int n_cells, std::uint64_t n_membranes,
                                                      double axis_coordinate, RngStream rng) {
  SampledAverageResult res;
  res.membranes = n_membranes;
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t k = 0; k < n_membranes; ++k) {
    const MembraneDensity d = sample_cellular(n_cells, rng);
    const double p = cellular_outcome_probability(d, axis_coordinate);
    sum += p;
    sum_sq += p * p;
  }
  res.mean = sum / n_membranes;
  const double var = std::max(0.0, sum_sq / n_membranes - res.mean * res.mean);
  res.std_error = std::sqrt(var / n_membranes);
  return res;
}

/// Sampled universal average on a 2-simplex with barycentric-grid cells:
/// random membranes, Monte Carlo collapses per membrane.
inline SampledAverageResult universal_average_grid3(const Simplex& s, const Vec& x_par,
                                                    int outcome, int resolution,
                                                    std::uint64_t n_membranes,
                                                    std::uint64_t trials_per_membrane,
                                                    RngStream rng) {
  require(s.outcomes() == 3, errc::unsupported, "grid cells are defined on the 2-simplex");
  const Vec b_par = s.barycentric(x_par);
  const int total_cells = detail::grid_cell_count(resolution);
  SampledAverageResult res;
  res.membranes = n_membranes;
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t k = 0; k < n_membranes; ++k) {
    std::vector<int> cells;
    do {
      cells.clear();
      for (int c = 0; c < total_cells; ++c)
        if (rng.next_u64() & 1u) cells.push_back(c);
    } while (cells.empty());
    const MembraneDensity d = MembraneDensity::cellular_grid(resolution, std::move(cells));
    std::uint64_t hits = 0;
    for (std::uint64_t t = 0; t < trials_per_membrane; ++t) {
      const BreakPoint bp = sample_breakpoint(d, s, rng);
      const auto win = detail::region_from_barycentric(b_par, s.barycentric(bp.location));
      hits += (win.index == outcome) ? 1 : 0;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(trials_per_membrane);
    sum += p;
    sum_sq += p * p;
  }
  res.mean = sum / n_membranes;
  const double var = std::max(0.0, sum_sq / n_membranes - res.mean * res.mean);
  res.std_error = std::sqrt(var / n_membranes);
  return res;
}

/// Collective q: the q-test assembled from ensemble-averaged sequential
/// probabilities, each agent running the chains with its own densities.
inline double ensemble_q(const Measurement& a, const Measurement& b, const Vec& x,
                         std::span<const Agent> agents) {
  detail::require_two_outcome_pair(a, b);
  require(!agents.empty(), errc::invalid_measurement, "ensemble requires at least one agent");
  const std::vector<ChainStep> chains[4] = {
      {{a, 0}, {b, 1}},  // ->a->-b
      {{a, 1}, {b, 0}},  // ->-a->b
      {{b, 0}, {a, 1}},  // ->b->-a
      {{b, 1}, {a, 0}},  // ->-b->a
  };
  double avg[4] = {0, 0, 0, 0};
  for (const auto& agent : agents)
    for (int k = 0; k < 4; ++k) avg[k] += sequential_probability(chains[k], x, agent);
  for (double& v : avg) v /= static_cast<double>(agents.size());
  return (avg[0] + avg[1]) - (avg[2] + avg[3]);
}

/// Collective-mind study for agents sharing one symmetric epsilon band per
/// mind: the averaged two-step probability, its closed form in the 1/eps
/// moments, and the single-epsilon representability residual (zero exactly
/// when all agents carry the same epsilon).
struct EnsembleStudy {
  double collective_probability = 0.0;
  double closed_form = 0.0;
  double k1 = 0.0, k2 = 0.0;  ///< mean 1/eps, mean 1/eps^2
  double best_single_eps = 0.0;
  double representability_residual = 0.0;  ///< k2 - k1^2, the moment gap
  bool single_eps_representable = false;
  double collective_q = 0.0;
};

inline EnsembleStudy ensemble_symmetry_study(std::span<const double> eps_list, double theta,
                                             double theta_a) {
  require(!eps_list.empty(), errc::invalid_measurement, "need at least one agent");
  const double ct = std::cos(theta), cta = std::cos(theta_a);
  for (double e : eps_list)
    require(std::abs(ct) < e && std::abs(cta) < e, errc::invalid_state,
            "requires |cos(theta)|, |cos(theta_a)| below every epsilon");

  const Simplex sa = Simplex::regular(2, 2);
  const Simplex sb = Simplex::regular(2, 2, std::vector<GivensRotation>{{0, 1, theta}});
  Vec x(2);
  x << std::cos(theta_a), std::sin(theta_a);

  std::vector<Agent> agents;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    Agent ag;
    ag.id = "agent-" + std::to_string(i);
    ag.densities.emplace("A", MembraneDensity::epsilon_interval(eps_list[i]));
    ag.densities.emplace("B", MembraneDensity::epsilon_interval(eps_list[i]));
    agents.push_back(std::move(ag));
  }
  const Measurement ma(sa, MembraneDensity::uniform(), "A");
  const Measurement mb(sb, MembraneDensity::uniform(), "B");
  const std::vector<ChainStep> chain = {{ma, 0}, {mb, 0}};

  EnsembleStudy st;
  st.collective_probability = ensemble_probability(agents, chain, x);
  for (double e : eps_list) {
    st.k1 += 1.0 / e;
    st.k2 += 1.0 / (e * e);
  }
  st.k1 /= static_cast<double>(eps_list.size());
  st.k2 /= static_cast<double>(eps_list.size());
  st.closed_form = 0.25 * (1.0 + st.k1 * (ct + cta) + st.k2 * ct * cta);
  st.best_single_eps = 1.0 / st.k1;
  st.representability_residual = st.k2 - st.k1 * st.k1;
  st.single_eps_representable = st.representability_residual < 1e-10;
  st.collective_q = ensemble_q(ma, mb, x, agents);
  return st;
}

/// Aggregated classification of a two-measurement scenario.
struct ModelVerdict {
  double commutativity = 0.0;        ///< order-effect commutator (Kolmogorov test)
  double reciprocity_residual = 0.0; ///< |P(a->b) - P(b->a)|
  double q_residual = 0.0;           ///< |q|
  std::string notes;
};

inline ModelVerdict classify_scenario(const Measurement& a, const Measurement& b, const Vec& x) {
  detail::require_two_outcome_pair(a, b);
  ModelVerdict v;
  v.commutativity = std::abs(classical_commutativity(a, b).commutator);
  const double p_ab = detail::transition0(b, a.simplex().vertex(0));
  const double p_ba = detail::transition0(a, b.simplex().vertex(0));
  v.reciprocity_residual = std::abs(p_ab - p_ba);
  v.q_residual = std::abs(q_test(a, b, x).q);
  v.notes = std::string(v.commutativity < tol::probability ? "commuting" : "order effect") +
            std::string("; reciprocity ") +
            (v.reciprocity_residual < tol::probability ? "holds" : "violated") + "; q " +
            (v.q_residual < tol::probability ? "= 0" : "!= 0");
  return v;
}

}  // namespace gtr

#endif  // GTR_DIAGNOSTICS_HPP
