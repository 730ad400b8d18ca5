#ifndef GTR_ENGINE_HPP
#define GTR_ENGINE_HPP

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtr/constants.hpp"
#include "gtr/density.hpp"
#include "gtr/error.hpp"
#include "gtr/geometry.hpp"
#include "gtr/rng.hpp"

namespace gtr {

/// First type: outcomes are merely identified after the fact; the collapse
/// dynamics is that of the non-degenerate measurement. Second type: fused
/// regions collapse jointly onto the sub-simplex of the group's vertices,
/// followed by a purification stage back to unit norm.
enum class DegeneracyType { First, Second };

/// A measurement: simplex + disintegration density + outcome grouping.
class Measurement {
 public:
  Measurement(Simplex simplex, MembraneDensity density, std::string label)
      : Measurement(std::move(simplex), std::move(density), std::move(label),
                    singleton_groups_for(), DegeneracyType::First) {}

  Measurement(Simplex simplex, MembraneDensity density, std::string label,
              std::vector<std::vector<int>> groups, DegeneracyType type)
      : simplex_(std::move(simplex)),
        density_(std::move(density)),
        label_(std::move(label)),
        groups_(std::move(groups)),
        type_(type) {
    detail::check_density_simplex(density_, simplex_);
    if (groups_.empty())
      for (int i = 0; i < simplex_.outcomes(); ++i) groups_.push_back({i});
    std::vector<int> seen(simplex_.outcomes(), 0);
    bool has_fused = false;
    for (auto& g : groups_) {
      require(!g.empty(), errc::invalid_measurement, "empty outcome group");
      std::sort(g.begin(), g.end());
      if (g.size() > 1) has_fused = true;
      for (int i : g) {
        require(i >= 0 && i < simplex_.outcomes(), errc::invalid_measurement,
                "outcome index out of range");
        require(!seen[i]++, errc::invalid_measurement, "outcome appears in two groups");
      }
    }
    for (int i = 0; i < simplex_.outcomes(); ++i)
      require(seen[i] == 1, errc::invalid_measurement, "groups must cover every outcome");
    require(type_ != DegeneracyType::Second || has_fused, errc::invalid_measurement,
            "second-type degeneracy needs a fused group");
    group_of_.assign(simplex_.outcomes(), 0);
    for (std::size_t g = 0; g < groups_.size(); ++g)
      for (int i : groups_[g]) group_of_[i] = static_cast<int>(g);
  }

  const Simplex& simplex() const { return simplex_; }
  const MembraneDensity& density() const { return density_; }
  const std::string& label() const { return label_; }
  const std::vector<std::vector<int>>& groups() const { return groups_; }
  DegeneracyType degeneracy_type() const { return type_; }
  int outcome_count() const { return simplex_.outcomes(); }
  int group_count() const { return static_cast<int>(groups_.size()); }
  int group_of(int outcome) const { return group_of_[outcome]; }
  bool non_degenerate() const {
    return static_cast<int>(groups_.size()) == simplex_.outcomes();
  }

  Measurement with_density(MembraneDensity d) const {
    return Measurement(simplex_, std::move(d), label_, groups_, type_);
  }

 private:
  static std::vector<std::vector<int>> singleton_groups_for() { return {}; }

  Simplex simplex_;
  MembraneDensity density_;
  std::string label_;
  std::vector<std::vector<int>> groups_;
  DegeneracyType type_;
  std::vector<int> group_of_;
};

/// One sampled collapse.
struct OutcomeRecord {
  int group = 0;
  Vec final_state;
  BreakPoint breakpoint;
  bool tie = false;
  bool deterministic = false;  ///< short-circuited (state already an eigenstate)
  Vec state_in, state_on_membrane, landing;
};

namespace detail {

// Exact outcome probabilities per *outcome* (not group) for closed kernels.
inline Vec outcome_probabilities_exact(const Measurement& m, const Vec& x_par,
                                       bool* renormalized_atom = nullptr) {
  const auto& d = m.density();
  const auto& s = m.simplex();
  if (d.kind() == DensityKind::Uniform) return s.barycentric(x_par);
  require(d.exact_1d() && s.outcomes() == 2, errc::unsupported,
          "no exact kernel for this density/simplex combination");
  const double t = s.axis_coordinate(x_par);
  const auto r0 = split_1d(d, t, 0);
  Vec p(2);
  p << r0.value, 1.0 - r0.value;
  if (renormalized_atom) *renormalized_atom = r0.renormalized_atom;
  return p;
}

inline Vec group_sums(const Measurement& m, const Vec& per_outcome) {
  Vec g = Vec::Zero(m.group_count());
  for (int i = 0; i < m.outcome_count(); ++i) g[m.group_of(i)] += per_outcome[i];
  return g;
}

}  // namespace detail

/// Probability of each outcome group for the two-stage measurement process:
/// orthogonal projection onto the membrane, then density-weighted collapse.
/// Fused groups get the sum of their members' region integrals.
inline Vec outcome_probabilities(const Measurement& m, const Vec& x, McConfig cfg = {}) {
  const Vec x_par = m.simplex().project_onto(x);
  const auto& d = m.density();
  if (d.kind() == DensityKind::Uniform || (d.exact_1d() && m.outcome_count() == 2))
    return detail::group_sums(m, detail::outcome_probabilities_exact(m, x_par));
  // Same sample set for every region: each draw lands in exactly one region,
  // so the estimates sum to the (estimated) total mass.
  Vec per_outcome(m.outcome_count());
  for (int i = 0; i < m.outcome_count(); ++i)
    per_outcome[i] = integrate_region(d, m.simplex(), x_par, i, cfg).value;
  return detail::group_sums(m, per_outcome);
}

namespace detail {

// Landing point of a fused collapse: conditional barycentric renormalization
// over the group's vertices (the affine rule matching the Luders post-state
// in the Bloch embedding).
inline Vec fused_landing_point(const Simplex& s, const Vec& b_par, const std::vector<int>& group) {
  double mass = 0.0;
  for (int i : group) mass += b_par[i];
  require(mass > 1e-14, errc::zero_probability_branch, "fused group has zero weight");
  Vec p = Vec::Zero(s.ambient_dim());
  for (int i : group) p += (b_par[i] / mass) * s.vertex(i);
  return p;
}

// Purification: move the landing point along the membrane normal until it
// reaches unit norm. Prefers the normal component of the original state.
inline Vec purify(const Simplex& s, const Vec& landing, const Vec& original_state) {
  const double nrm2 = landing.squaredNorm();
  if (nrm2 >= 1.0 - 1e-14) return landing / landing.norm();
  Vec normal = original_state - s.span_projection(original_state);
  const double nn = normal.norm();
  if (nn > 1e-9)
    normal /= nn;
  else
    normal = s.canonical_normal();
  return landing + std::sqrt(1.0 - nrm2) * normal;
}

}  // namespace detail

/// Runs one measurement: project, sample the breaking point, collapse.
/// Singleton outcome -> the outcome vertex. Second-type fused outcome -> the
/// purified landing point on the group's sub-simplex. States already at an
/// eigenstate (vertex, or on a fused group's sub-simplex face for the group's
/// own collapse) reproduce their outcome with certainty.
inline OutcomeRecord run_measurement(const Measurement& m, const Vec& x, RngStream& rng,
                                     bool want_trace = false) {
  OutcomeRecord rec;
  const auto& s = m.simplex();
  const Vec x_par = s.project_onto(x);
  const Vec b_par = s.barycentric(x_par);
  if (want_trace) {
    rec.state_in = x;
    rec.state_on_membrane = x_par;
  }

  // Support = outcomes with positive weight; the measure-zero regions of the
  // remaining outcomes can never win.
  int support = 0, last = -1;
  for (int i = 0; i < b_par.size(); ++i)
    if (b_par[i] > tol::geometry) {
      ++support;
      last = i;
    }

  int outcome;
  if (support == 1) {
    // First-kind certainty: a vertex state cannot be moved by the collapse.
    outcome = last;
    rec.deterministic = true;
    rec.breakpoint = {x_par, BreakSource::Continuous};
  } else {
    rec.breakpoint = sample_breakpoint(m.density(), s, rng);
    const Vec b_break = s.barycentric(rec.breakpoint.location);
    const auto win = detail::region_from_barycentric(b_par, b_break);
    outcome = win.index;
    rec.tie = win.tie;
  }

  rec.group = m.group_of(outcome);
  const auto& group = m.groups()[rec.group];
  if (group.size() == 1 || m.degeneracy_type() == DegeneracyType::First) {
    rec.final_state = s.vertex(outcome);
    if (want_trace) rec.landing = rec.final_state;
  } else {
    const Vec landing = detail::fused_landing_point(s, b_par, group);
    if (want_trace) rec.landing = landing;
    rec.final_state = detail::purify(s, landing, x);
  }
  return rec;
}

/// Membrane-update strategies applied between sequential measurements.
enum class UpdateStrategy { NoUpdate, ReplicabilityLock };

/// An agent owns its per-measurement densities (keyed by measurement label)
/// and an update strategy. Densities are never shared across agents.
struct Agent {
  std::string id;
  std::map<std::string, MembraneDensity> densities;
  UpdateStrategy strategy = UpdateStrategy::NoUpdate;

  const MembraneDensity& density_for(const Measurement& m) const {
    auto it = densities.find(m.label());
    return it != densities.end() ? it->second : m.density();
  }
};

namespace detail {

// Replicability lock: after obtaining outcome v of a two-outcome measurement,
// replace its density by a narrow uniform band strictly on v's winning side
// of every projection that other measurements' outcome states can reach, so
// repeating the measurement returns v with certainty.
inline MembraneDensity replicability_lock_density(const Measurement& locked, int group,
                                                  std::span<const Measurement> others) {
  require(locked.outcome_count() == 2 && locked.non_degenerate(), errc::unsupported,
          "replicability lock is defined for two-outcome non-degenerate measurements");
  double reach = 0.0;  // largest |projection| of any other outcome state
  for (const auto& m : others) {
    if (m.label() == locked.label()) continue;
    // Second-type fused outcomes are purified off-membrane states whose
    // projection onto this band is not bounded by the vertex projections.
    require(m.non_degenerate() || m.degeneracy_type() == DegeneracyType::First,
            errc::unsatisfiable_lock,
            "cannot bound the reachable projections of a second-type degenerate measurement");
    for (int i = 0; i < m.outcome_count(); ++i)
      reach = std::max(reach,
                       std::abs(locked.simplex().axis_coordinate(
                           locked.simplex().span_projection(m.simplex().vertex(i)))));
  }
  constexpr double width = 0.05;
  const double gap = 1.0 - reach;
  if (gap <= width + 1e-9)
    fail(errc::unsatisfiable_lock, "no breakable support fits between the membrane end and the "
                                   "other measurements' projections");
  // Outcome 0 sits at +1: lock mass below every reachable projection, so the
  // break always happens on the far side and the collapse returns outcome 0.
  const double mid = (group == 0) ? -(1.0 + reach) / 2.0 : (1.0 + reach) / 2.0;
  return MembraneDensity::piecewise({mid - width / 2.0, mid + width / 2.0}, {1.0});
}

}  // namespace detail

/// One step of a measurement chain: the measurement plus the outcome group
/// whose probability is being chained.
struct ChainStep {
  Measurement measurement;
  int target_group = 0;
};

/// Exact probability of realizing the chain of target outcomes from x0,
/// multiplying per-step transition probabilities through the realized
/// eigenstates. The agent's densities override the measurement defaults and
/// its update strategy is applied between steps.
inline double sequential_probability(std::span<const ChainStep> chain, const Vec& x0,
                                     const Agent& agent = {}) {
  Agent local = agent;
  std::vector<Measurement> all;
  all.reserve(chain.size());
  for (const auto& st : chain) all.push_back(st.measurement);

  double p = 1.0;
  Vec x = x0;
  for (const auto& st : chain) {
    const Measurement eff = st.measurement.with_density(local.density_for(st.measurement));
    require(st.target_group >= 0 && st.target_group < eff.group_count(), errc::invalid_measurement,
            "target group out of range");
    const Vec probs = outcome_probabilities(eff, x);
    p *= probs[st.target_group];
    if (p == 0.0) return 0.0;
    const auto& group = eff.groups()[st.target_group];
    require(group.size() == 1, errc::unsupported,
            "exact chaining requires singleton target outcomes; use run_sequence for fused ones");
    x = eff.simplex().vertex(group[0]);
    if (local.strategy == UpdateStrategy::ReplicabilityLock)
      local.densities.insert_or_assign(
          eff.label(), detail::replicability_lock_density(eff, st.target_group, all));
  }
  return p;
}

/// Samples a full measurement sequence, mutating the (local copy of the)
/// agent's densities per its update strategy after every step.
inline std::vector<OutcomeRecord> run_sequence(std::span<const Measurement> chain, const Vec& x0,
                                               const Agent& agent, RngStream& rng,
                                               bool want_trace = false) {
  Agent local = agent;
  std::vector<OutcomeRecord> records;
  records.reserve(chain.size());
  Vec x = x0;
  for (const auto& m : chain) {
    const Measurement eff = m.with_density(local.density_for(m));
    OutcomeRecord rec = run_measurement(eff, x, rng, want_trace);
    x = rec.final_state;
    if (local.strategy == UpdateStrategy::ReplicabilityLock)
      local.densities.insert_or_assign(eff.label(),
                                       detail::replicability_lock_density(eff, rec.group, chain));
    records.push_back(std::move(rec));
  }
  return records;
}

/// Separable measurement on a composite entity: two membranes, one per
/// sub-entity, working independently. Joint outcome (i, j) is flattened as
/// i * N_B + j; on product states the joint distribution is the outer product
/// of the marginals, in either execution order.
class ProductMeasurement {
 public:
  ProductMeasurement(Measurement a, Measurement b) : a_(std::move(a)), b_(std::move(b)) {
    require(a_.non_degenerate() && b_.non_degenerate(), errc::invalid_measurement,
            "product composition is defined for non-degenerate factors");
  }

  const Measurement& factor_a() const { return a_; }
  const Measurement& factor_b() const { return b_; }
  int outcome_count() const { return a_.outcome_count() * b_.outcome_count(); }
  int joint_index(int i, int j) const { return i * b_.outcome_count() + j; }

  Vec joint_probabilities(const Vec& xa, const Vec& xb) const {
    const Vec pa = outcome_probabilities(a_, xa);
    const Vec pb = outcome_probabilities(b_, xb);
    Vec joint(outcome_count());
    for (int i = 0; i < pa.size(); ++i)
      for (int j = 0; j < pb.size(); ++j) joint[joint_index(i, j)] = pa[i] * pb[j];
    return joint;
  }

  /// Runs both collapses; b_first only changes the sampling order, never the
  /// statistics (the membranes are independent).
  std::pair<OutcomeRecord, OutcomeRecord> run(const Vec& xa, const Vec& xb, RngStream& rng,
                                              bool b_first = false) const {
    if (b_first) {
      OutcomeRecord rb = run_measurement(b_, xb, rng);
      OutcomeRecord ra = run_measurement(a_, xa, rng);
      return {std::move(ra), std::move(rb)};
    }
    OutcomeRecord ra = run_measurement(a_, xa, rng);
    OutcomeRecord rb = run_measurement(b_, xb, rng);
    return {std::move(ra), std::move(rb)};
  }

 private:
  Measurement a_, b_;
};

/// Uniform average of the sequential probability over an ensemble of agents
/// (the collective-level statistics of a set of individual minds).
inline double ensemble_probability(std::span<const Agent> agents,
                                   std::span<const ChainStep> chain, const Vec& x0) {
  require(!agents.empty(), errc::invalid_measurement, "ensemble requires at least one agent");
  double acc = 0.0;
  for (const auto& a : agents) acc += sequential_probability(chain, x0, a);
  return acc / static_cast<double>(agents.size());
}

}  // namespace gtr

#endif  // GTR_ENGINE_HPP
