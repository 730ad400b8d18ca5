#ifndef GTR_DENSITY_HPP
#define GTR_DENSITY_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gtr/constants.hpp"
#include "gtr/error.hpp"
#include "gtr/geometry.hpp"
#include "gtr/rng.hpp"

namespace gtr {

enum class DensityKind {
  Uniform,         ///< uniform over the whole membrane, any N
  Epsilon,         ///< uniform on [-eps, eps], two outcomes
  Piecewise,       ///< piecewise-constant on [-1, 1], two outcomes
  Atomic,          ///< point masses, optionally mixed with a continuous part
  Cellular,        ///< n equal cells of [-1, 1], a subset uniformly breakable
  CellularGrid,    ///< barycentric-grid cells on the 2-simplex, sampled only
  GeneralSampled,  ///< arbitrary density via an evaluator, Monte Carlo only
};

inline const char* density_kind_name(DensityKind k) {
  switch (k) {
    case DensityKind::Uniform: return "uniform";
    case DensityKind::Epsilon: return "epsilon";
    case DensityKind::Piecewise: return "piecewise";
    case DensityKind::Atomic: return "atomic";
    case DensityKind::Cellular: return "cellular";
    case DensityKind::CellularGrid: return "cellular-grid";
    case DensityKind::GeneralSampled: return "general";
  }
  return "?";
}

/// Disintegration propensity density over a measurement simplex.
///
/// The one-dimensional variants live on the axis coordinate of a 1-simplex
/// (vertex 0 at +1, vertex 1 at -1) and have closed-form kernels: the mass on
/// [-1, t] is the exact probability of the outcome at +1 when the on-membrane
/// state sits at t. GeneralSampled densities are evaluated relative to the
/// uniform density (value 1 everywhere integrates to 1), so no chart constant
/// ever enters the public results.
class MembraneDensity {
 public:
  struct Segment {
    double lo, hi, height;
  };
  struct Atom {
    double loc, mass;
  };
  using Evaluator = std::function<double(const Vec& barycentric)>;

  static MembraneDensity uniform() {
    MembraneDensity d(DensityKind::Uniform);
    d.segments_ = {{-1.0, 1.0, 0.5}};
    return d;
  }

  static MembraneDensity epsilon_interval(double eps) {
    require(eps > 0.0 && eps <= 1.0, errc::invalid_density,
            "epsilon must be in (0, 1]; use an atomic mass at 0 for the eps -> 0 limit");
    MembraneDensity d(DensityKind::Epsilon);
    d.eps_ = eps;
    d.segments_ = {{-eps, eps, 0.5 / eps}};
    return d;
  }

  /// Piecewise-constant density: weights[i] is the relative height on
  /// [breaks[i], breaks[i+1]]; heights are normalized to unit total mass.
  static MembraneDensity piecewise(std::vector<double> breaks, std::vector<double> weights) {
    require(breaks.size() >= 2 && weights.size() + 1 == breaks.size(), errc::invalid_density,
            "need k+1 breakpoints for k interval weights");
    require(std::is_sorted(breaks.begin(), breaks.end()), errc::invalid_density,
            "breakpoints must be sorted");
    require(breaks.front() >= -1.0 - 1e-12 && breaks.back() <= 1.0 + 1e-12, errc::invalid_density,
            "breakpoints must lie in [-1, 1]");
    double mass = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      require(weights[i] >= 0.0, errc::invalid_density, "weights must be non-negative");
      mass += weights[i] * (breaks[i + 1] - breaks[i]);
    }
    require(mass > 0.0, errc::invalid_density, "density has zero total mass");
    MembraneDensity d(DensityKind::Piecewise);
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (weights[i] > 0.0 && breaks[i + 1] > breaks[i])
        d.segments_.push_back({breaks[i], breaks[i + 1], weights[i] / mass});
    d.breaks_ = std::move(breaks);
    d.weights_ = std::move(weights);
    return d;
  }

  /// Point masses at the given locations, optionally on top of a continuous
  /// piecewise part carrying the remaining 1 - sum(masses).
  static MembraneDensity atomic(std::vector<double> locs, std::vector<double> masses,
                                std::optional<MembraneDensity> continuous = std::nullopt) {
    require(locs.size() == masses.size() && !locs.empty(), errc::invalid_density,
            "need matching location/mass lists");
    double atom_mass = 0.0;
    for (std::size_t i = 0; i < locs.size(); ++i) {
      require(locs[i] >= -1.0 && locs[i] <= 1.0, errc::invalid_density,
              "atom locations must lie in [-1, 1]");
      require(masses[i] >= 0.0, errc::invalid_density, "atom masses must be non-negative");
      atom_mass += masses[i];
    }
    MembraneDensity d(DensityKind::Atomic);
    if (continuous) {
      require(continuous->kind() == DensityKind::Piecewise ||
                  continuous->kind() == DensityKind::Uniform ||
                  continuous->kind() == DensityKind::Epsilon,
              errc::invalid_density, "continuous part must be a 1-d closed-form density");
      const double cont_mass = 1.0 - atom_mass;
      require(cont_mass >= -tol::density_mass, errc::invalid_density,
              "atom masses exceed total mass 1");
      for (auto seg : continuous->segments_)
        d.segments_.push_back({seg.lo, seg.hi, seg.height * cont_mass});
    } else {
      require(std::abs(atom_mass - 1.0) <= tol::density_mass, errc::invalid_density,
              "atom masses must sum to 1 when there is no continuous part");
    }
    std::vector<std::size_t> order(locs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return locs[a] < locs[b]; });
    for (auto i : order)
      if (masses[i] > 0.0) d.atoms_.push_back({locs[i], masses[i]});
    return d;
  }

  /// Cellular density: n equal cells of [-1, 1], uniformly breakable on the
  /// given (non-empty) subset of 0-based cell indices, unbreakable elsewhere.
  static MembraneDensity cellular(int n_cells, std::vector<int> breakable) {
    require(n_cells >= 1, errc::invalid_density, "need at least one cell");
    require(!breakable.empty(), errc::invalid_density,
            "the totally unbreakable membrane is excluded");
    std::sort(breakable.begin(), breakable.end());
    breakable.erase(std::unique(breakable.begin(), breakable.end()), breakable.end());
    require(breakable.front() >= 0 && breakable.back() < n_cells, errc::invalid_density,
            "breakable cell index out of range");
    MembraneDensity d(DensityKind::Cellular);
    d.cells_n_ = n_cells;
    const double w = 2.0 / n_cells;
    const double h = 1.0 / (static_cast<double>(breakable.size()) * w);
    for (int c : breakable) {
      const double lo = -1.0 + c * w;
      if (!d.segments_.empty() && std::abs(d.segments_.back().hi - lo) < 1e-15)
        d.segments_.back().hi = lo + w;  // merge adjacent cells
      else
        d.segments_.push_back({lo, lo + w, h});
    }
    d.breakable_ = std::move(breakable);
    return d;
  }

  /// Barycentric-grid cellular density on a 2-simplex: resolution r gives r^2
  /// congruent triangular cells; only sampling is offered (no closed forms).
  static MembraneDensity cellular_grid(int resolution, std::vector<int> breakable) {
    require(resolution >= 1, errc::invalid_density, "resolution must be positive");
    const int total = resolution * resolution;
    require(!breakable.empty(), errc::invalid_density,
            "the totally unbreakable membrane is excluded");
    std::sort(breakable.begin(), breakable.end());
    breakable.erase(std::unique(breakable.begin(), breakable.end()), breakable.end());
    require(breakable.front() >= 0 && breakable.back() < total, errc::invalid_density,
            "breakable cell index out of range");
    MembraneDensity d(DensityKind::CellularGrid);
    d.grid_resolution_ = resolution;
    d.breakable_ = std::move(breakable);
    return d;
  }

  /// Arbitrary density given as a value relative to the uniform density (the
  /// constant function 1 is the uniform membrane), with a supremum bound for
  /// rejection sampling.
  static MembraneDensity general(Evaluator evaluator, double sup_bound) {
    require(static_cast<bool>(evaluator), errc::invalid_density, "evaluator required");
    require(sup_bound > 0.0 && std::isfinite(sup_bound), errc::invalid_density,
            "sup bound must be positive and finite");
    MembraneDensity d(DensityKind::GeneralSampled);
    d.evaluator_ = std::move(evaluator);
    d.sup_bound_ = sup_bound;
    return d;
  }

  DensityKind kind() const { return kind_; }
  double eps() const { return eps_; }
  int cell_count() const { return cells_n_; }
  int grid_resolution() const { return grid_resolution_; }
  const std::vector<int>& breakable_cells() const { return breakable_; }
  const std::vector<double>& piecewise_breaks() const { return breaks_; }
  const std::vector<double>& piecewise_weights() const { return weights_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double sup_bound() const { return sup_bound_; }
  const Evaluator& evaluator() const { return evaluator_; }

  /// Closed-form kernel available (exact region integrals on a 1-simplex)?
  bool exact_1d() const {
    return kind_ == DensityKind::Epsilon || kind_ == DensityKind::Piecewise ||
           kind_ == DensityKind::Atomic || kind_ == DensityKind::Cellular ||
           (kind_ == DensityKind::Uniform);
  }

  /// Number of outcomes this density is tied to (0 = any).
  int required_outcomes() const {
    switch (kind_) {
      case DensityKind::Uniform:
      case DensityKind::GeneralSampled: return 0;
      case DensityKind::CellularGrid: return 3;
      default: return 2;
    }
  }

  double total_mass() const {
    double m = 0.0;
    for (const auto& s : segments_) m += (s.hi - s.lo) * s.height;
    for (const auto& a : atoms_) m += a.mass;
    return m;
  }

  /// Continuous + atomic mass strictly below t.
  double mass_strictly_below(double t) const {
    double m = 0.0;
    for (const auto& s : segments_) {
      if (t <= s.lo) break;
      m += (std::min(t, s.hi) - s.lo) * s.height;
    }
    for (const auto& a : atoms_) {
      if (a.loc >= t - atom_tol_) break;
      m += a.mass;
    }
    return m;
  }

  /// Mass of an atom sitting exactly at t (within 1e-12), 0 otherwise.
  double atom_at(double t) const {
    for (const auto& a : atoms_)
      if (std::abs(a.loc - t) <= atom_tol_) return a.mass;
    return 0.0;
  }

  /// Mirror symmetry rho(y) = rho(-y) of the 1-d kernel.
  bool symmetric_1d() const {
    const auto mirror_seg = [&](const Segment& s, const Segment& r) {
      return std::abs(s.lo + r.hi) < 1e-12 && std::abs(s.hi + r.lo) < 1e-12 &&
             std::abs(s.height - r.height) < 1e-12;
    };
    const std::size_t ns = segments_.size();
    for (std::size_t i = 0; i < ns; ++i)
      if (!mirror_seg(segments_[i], segments_[ns - 1 - i])) return false;
    const std::size_t na = atoms_.size();
    for (std::size_t i = 0; i < na; ++i) {
      const auto& a = atoms_[i];
      const auto& b = atoms_[na - 1 - i];
      if (std::abs(a.loc + b.loc) > 1e-12 || std::abs(a.mass - b.mass) > 1e-12) return false;
    }
    return true;
  }

  /// Inverse-CDF sample of the 1-d kernel. Returns the axis coordinate and
  /// whether an atom produced it.
  std::pair<double, bool> sample_coordinate(RngStream& rng) const {
    double atom_total = 0.0;
    for (const auto& a : atoms_) atom_total += a.mass;
    const double u = rng.uniform01();
    if (u < atom_total) {
      double acc = 0.0;
      for (const auto& a : atoms_) {
        acc += a.mass;
        if (u < acc) return {a.loc, true};
      }
      return {atoms_.back().loc, true};
    }
    if (segments_.empty()) return {atoms_.back().loc, true};  // mass-rounding sliver
    double rest = (u - atom_total);
    for (const auto& s : segments_) {
      const double m = (s.hi - s.lo) * s.height;
      if (rest < m || &s == &segments_.back()) {
        const double t = s.lo + std::min(rest / s.height, s.hi - s.lo);
        return {t, false};
      }
      rest -= m;
    }
    fail(errc::invalid_density, "density has no continuous mass to sample");
  }

 private:
  explicit MembraneDensity(DensityKind k) : kind_(k) {}
  static constexpr double atom_tol_ = 1e-12;

  DensityKind kind_;
  std::vector<Segment> segments_;
  std::vector<Atom> atoms_;
  std::vector<double> breaks_, weights_;
  std::vector<int> breakable_;
  double eps_ = 0.0;
  int cells_n_ = 0;
  int grid_resolution_ = 0;
  Evaluator evaluator_;
  double sup_bound_ = 0.0;
};

/// Where a breaking point came from.
enum class BreakSource { Continuous, Atomic };

struct BreakPoint {
  Vec location;
  BreakSource source = BreakSource::Continuous;
};

/// Budget for Monte Carlo integration paths.
struct McConfig {
  std::uint64_t budget = 100000;
  double target_stderr = 0.0;  ///< 0 = spend the whole budget
  RngStream stream;
};

struct IntegralResult {
  double value = 0.0;
  double std_error = 0.0;  ///< 0 for exact kernels
  bool exact = true;
  bool renormalized_atom = false;  ///< an atom at the state was discarded
};

namespace detail {

// Triangular barycentric grid on the 2-simplex, resolution r: "up" cells
// first (row-major), then "down" cells. All cells are congruent.
struct GridCell {
  Vec b0, b1, b2;  // barycentric corners (length 3)
};

inline int grid_cell_count(int r) { return r * r; }

inline GridCell grid_cell(int r, int id) {
  const int ups = r * (r + 1) / 2;
  auto bary = [](double s, double t) {
    Vec b(3);
    b << 1.0 - s - t, s, t;
    return b;
  };
  if (id < ups) {
    int j = 0, off = 0;
    while (off + (r - j) <= id) off += (r - j), ++j;
    const int i = id - off;
    const double s = static_cast<double>(i) / r, t = static_cast<double>(j) / r, w = 1.0 / r;
    return {bary(s, t), bary(s + w, t), bary(s, t + w)};
  }
  int id2 = id - ups;
  int j = 0, off = 0;
  while (off + (r - 1 - j) <= id2) off += (r - 1 - j), ++j;
  const int i = id2 - off;
  const double s = static_cast<double>(i) / r, t = static_cast<double>(j) / r, w = 1.0 / r;
  return {bary(s + w, t), bary(s, t + w), bary(s + w, t + w)};
}

inline int grid_cell_of(int r, const Vec& barycentric) {
  const double s = barycentric[1], t = barycentric[2];
  int i = std::min(static_cast<int>(std::floor(s * r)), r - 1);
  int j = std::min(static_cast<int>(std::floor(t * r)), r - 1);
  if (i + j > r - 1) i = r - 1 - j;  // clamp boundary round-off
  const double fs = s * r - i, ft = t * r - j;
  const bool down = (fs + ft > 1.0) && (i + j <= r - 2);
  if (!down) {
    int off = 0;
    for (int q = 0; q < j; ++q) off += (r - q);
    return off + i;
  }
  int off = r * (r + 1) / 2;
  for (int q = 0; q < j; ++q) off += (r - 1 - q);
  return off + i;
}

// Uniform barycentric sample (Dirichlet(1,...,1)).
inline Vec dirichlet_uniform(int n, RngStream& rng) {
  Vec b(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    b[i] = rng.exponential();
    sum += b[i];
  }
  return b / sum;
}

// Uniform point in a triangle given barycentric corners.
inline Vec sample_in_triangle(const GridCell& cell, RngStream& rng) {
  double u = rng.uniform01(), v = rng.uniform01();
  if (u + v > 1.0) {
    u = 1.0 - u;
    v = 1.0 - v;
  }
  return cell.b0 + u * (cell.b1 - cell.b0) + v * (cell.b2 - cell.b0);
}

inline void check_density_simplex(const MembraneDensity& d, const Simplex& s) {
  const int need = d.required_outcomes();
  require(need == 0 || need == s.outcomes(), errc::invalid_density,
          std::string("density kind '") + density_kind_name(d.kind()) + "' requires " +
              std::to_string(need) + " outcomes");
}

// Exact split of a 1-d kernel at axis coordinate t: probability of the
// outcome at +1 and at -1. An atom exactly at t is a point of unstable
// equilibrium; its mass is renormalized away and flagged.
inline IntegralResult split_1d(const MembraneDensity& d, double t, int region) {
  const double at = d.atom_at(t);
  IntegralResult res;
  if (at > 0.0) {
    require(1.0 - at > 1e-14, errc::unstable_equilibrium,
            "all breakable mass sits exactly at the state");
    res.renormalized_atom = true;
  }
  const double below = d.mass_strictly_below(t);
  const double above = d.total_mass() - below - at;
  const double p0 = below / (1.0 - at);
  res.value = (region == 0) ? p0 : above / (1.0 - at);
  return res;
}

}  // namespace detail

/// Exact or Monte Carlo integral of the density over sub-region A_i carved by
/// the on-membrane state x_par. Closed-form variants return the exact value;
/// GeneralSampled and CellularGrid return an estimate with a standard error.
inline IntegralResult integrate_region(const MembraneDensity& d, const Simplex& s, const Vec& x_par,
                                       int region, McConfig cfg = {}) {
  detail::check_density_simplex(d, s);
  require(region >= 0 && region < s.outcomes(), errc::dimension_mismatch,
          "region index out of range");
  const Vec b_x = s.barycentric(x_par);

  if (d.kind() == DensityKind::Uniform) {
    // Relative Lebesgue measure of A_i equals the barycentric weight.
    return {b_x[region], 0.0, true, false};
  }
  if (d.exact_1d() && s.outcomes() == 2) {
    return detail::split_1d(d, s.axis_coordinate(x_par), region);
  }

  // Monte Carlo path: frequency of the region under sampled breaking points
  // (cellular grid), or importance weights relative to uniform (general).
  IntegralResult res;
  res.exact = false;
  std::uint64_t n = 0;
  double sum = 0.0, sum_sq = 0.0;
  const std::uint64_t chunk = 4096;
  while (n < cfg.budget) {
    const std::uint64_t m = std::min<std::uint64_t>(chunk, cfg.budget - n);
    for (std::uint64_t k = 0; k < m; ++k) {
      double w = 1.0;
      Vec b_y;
      if (d.kind() == DensityKind::GeneralSampled) {
        b_y = detail::dirichlet_uniform(s.outcomes(), cfg.stream);
        w = d.evaluator()(b_y);
        require(w >= 0.0, errc::invalid_density, "density evaluator returned a negative value");
      } else {  // CellularGrid
        const auto& cells = d.breakable_cells();
        const int cell = cells[cfg.stream.below(cells.size())];
        b_y = detail::sample_in_triangle(detail::grid_cell(d.grid_resolution(), cell), cfg.stream);
      }
      const auto win = detail::region_from_barycentric(b_x, b_y);
      const double v = (win.index == region) ? w : 0.0;
      sum += v;
      sum_sq += v * v;
    }
    n += m;
    if (cfg.target_stderr > 0.0 && n >= 1024) {
      const double mean = sum / n;
      const double var = std::max(0.0, sum_sq / n - mean * mean);
      if (std::sqrt(var / n) <= cfg.target_stderr) break;
    }
  }
  res.value = sum / n;
  const double var = std::max(0.0, sum_sq / n - res.value * res.value);
  res.std_error = std::sqrt(var / n);
  if (cfg.target_stderr > 0.0 && res.std_error > cfg.target_stderr)
    fail(errc::budget_exceeded, "standard error " + std::to_string(res.std_error) +
                                    " above target within the sample budget");
  return res;
}

/// Samples a breaking point distributed per the density.
inline BreakPoint sample_breakpoint(const MembraneDensity& d, const Simplex& s, RngStream& rng) {
  detail::check_density_simplex(d, s);
  switch (d.kind()) {
    case DensityKind::Uniform: {
      const Vec b = detail::dirichlet_uniform(s.outcomes(), rng);
      return {s.point_from_barycentric(b), BreakSource::Continuous};
    }
    case DensityKind::CellularGrid: {
      const auto& cells = d.breakable_cells();
      const int cell = cells[rng.below(cells.size())];
      const Vec b = detail::sample_in_triangle(detail::grid_cell(d.grid_resolution(), cell), rng);
      return {s.point_from_barycentric(b), BreakSource::Continuous};
    }
    case DensityKind::GeneralSampled: {
      std::uint64_t attempts = 0;
      for (;;) {
        const Vec b = detail::dirichlet_uniform(s.outcomes(), rng);
        const double w = d.evaluator()(b);
        require(w >= 0.0 && w <= d.sup_bound() * (1.0 + 1e-9), errc::invalid_density,
                "evaluator value outside [0, sup_bound]");
        if (rng.uniform01() * d.sup_bound() <= w)
          return {s.point_from_barycentric(b), BreakSource::Continuous};
        if (++attempts > 2000000)
          fail(errc::rejection_stall, "acceptance rate below 1e-6; sup bound is too loose");
      }
    }
    default: {
      const auto [t, atomic] = d.sample_coordinate(rng);
      return {t * s.vertex(0), atomic ? BreakSource::Atomic : BreakSource::Continuous};
    }
  }
}

/// All 2^n - 1 cellular membranes with n cells, in mask order (cell 0 is the
/// lowest bit). Enumeration is capped at n = 24.
class CellularEnumerator {
 public:
  explicit CellularEnumerator(int n_cells) : n_(n_cells) {
    require(n_cells >= 1, errc::invalid_density, "need at least one cell");
    require(n_cells <= 24, errc::enumeration_too_large,
            "enumeration capped at 24 cells; use sampled averages instead");
  }

  std::uint64_t total() const { return (std::uint64_t{1} << n_) - 1; }

  std::optional<MembraneDensity> next() {
    if (mask_ > total()) return std::nullopt;
    std::vector<int> cells;
    for (int c = 0; c < n_; ++c)
      if (mask_ & (std::uint64_t{1} << c)) cells.push_back(c);
    ++mask_;
    return MembraneDensity::cellular(n_, std::move(cells));
  }

 private:
  int n_;
  std::uint64_t mask_ = 1;
};

/// Random non-empty breakable subset of n cells (uniform over subsets).
inline MembraneDensity sample_cellular(int n_cells, RngStream& rng) {
  require(n_cells >= 1, errc::invalid_density, "need at least one cell");
  std::vector<int> cells;
  do {
    cells.clear();
    if (n_cells <= 62) {
      const std::uint64_t mask = rng.below((std::uint64_t{1} << n_cells) - 1) + 1;
      for (int c = 0; c < n_cells; ++c)
        if (mask & (std::uint64_t{1} << c)) cells.push_back(c);
    } else {
      for (int c = 0; c < n_cells; ++c)
        if (rng.next_u64() & 1u) cells.push_back(c);
    }
  } while (cells.empty());
  return MembraneDensity::cellular(n_cells, std::move(cells));
}

namespace detail {

// Per-membrane outcome-0 probability of a cellular membrane, as a function of
// the fully-below cell count, the straddling-cell fraction and the mask.
struct CellularSplit {
  std::uint64_t below_mask = 0;
  int straddle = -1;
  double fraction = 0.0;  // breakable fraction of the straddling cell below t
};

inline CellularSplit cellular_split(int n, double t) {
  CellularSplit sp;
  const double w = 2.0 / n;
  for (int c = 0; c < n; ++c) {
    const double lo = -1.0 + c * w, hi = lo + w;
    if (hi <= t)
      sp.below_mask |= (std::uint64_t{1} << c);
    else if (lo < t && t < hi) {
      sp.straddle = c;
      sp.fraction = (t - lo) / w;
    }
  }
  return sp;
}

}  // namespace detail

/// Exact average outcome probabilities over all 2^n - 1 cellular membranes for
/// a two-outcome measurement with the on-membrane state at axis coordinate t.
/// Converges to the uniform-membrane (Born) value (1 +- t)/2 as n grows.
inline Vec cellular_average_probability(int n_cells, double t) {
  CellularEnumerator bound_check(n_cells);  // enforces the n <= 24 cap
  require(t >= -1.0 && t <= 1.0, errc::invalid_state, "axis coordinate outside [-1, 1]");
  const auto sp = detail::cellular_split(n_cells, t);
  const std::uint64_t total = bound_check.total();
  double acc = 0.0;
  for (std::uint64_t mask = 1; mask <= total; ++mask) {
    const int k = std::popcount(mask);
    const double below = static_cast<double>(std::popcount(mask & sp.below_mask));
    const double frac =
        (sp.straddle >= 0 && (mask >> sp.straddle) & 1u) ? sp.fraction : 0.0;
    acc += (below + frac) / k;
  }
  const double p0 = acc / static_cast<double>(total);
  Vec out(2);
  out << p0, 1.0 - p0;
  return out;
}

/// Outcome-0 probability of one cellular membrane (exact), for sampled
/// averages with large n.
inline double cellular_outcome_probability(const MembraneDensity& d, double t) {
  require(d.kind() == DensityKind::Cellular, errc::invalid_density, "cellular density required");
  return detail::split_1d(d, t, 0).value;
}

/// Mean and spread of the per-membrane probability across the enumeration.
/// The mean sits at the uniform value identically; the spread around it is
/// what shrinks as the cell count grows.
struct CellularAverageStats {
  double mean = 0.0;
  double mean_abs_dev = 0.0;  ///< mean |P_0(membrane) - uniform value|
};

inline CellularAverageStats cellular_average_stats(int n_cells, double t) {
  CellularEnumerator bound_check(n_cells);
  require(t >= -1.0 && t <= 1.0, errc::invalid_state, "axis coordinate outside [-1, 1]");
  const auto sp = detail::cellular_split(n_cells, t);
  const double uniform_value = 0.5 * (1.0 + t);
  const std::uint64_t total = bound_check.total();
  double acc = 0.0, dev = 0.0;
  for (std::uint64_t mask = 1; mask <= total; ++mask) {
    const int k = std::popcount(mask);
    const double below = static_cast<double>(std::popcount(mask & sp.below_mask));
    const double frac = (sp.straddle >= 0 && (mask >> sp.straddle) & 1u) ? sp.fraction : 0.0;
    const double p = (below + frac) / k;
    acc += p;
    dev += std::abs(p - uniform_value);
  }
  return {acc / static_cast<double>(total), dev / static_cast<double>(total)};
}

}  // namespace gtr

#endif  // GTR_DENSITY_HPP
