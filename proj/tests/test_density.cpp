#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "gtr/density.hpp"
#include "gtr/geometry.hpp"
#include "gtr/rng.hpp"
#include "support/oracles.hpp"

using namespace gtr;

namespace {

const Simplex& band() {
  static const Simplex s = Simplex::regular(2, 1);
  return s;
}

Vec state_at(const Simplex& s, double t) { return t * s.vertex(0); }

double region_mass(const MembraneDensity& d, double t, int region) {
  return integrate_region(d, band(), state_at(band(), t), region).value;
}

}  // namespace

TEST_CASE("uniform density on the segment has height 1/2 and unit mass") {
  const auto d = MembraneDensity::uniform();
  REQUIRE(d.segments().size() == 1);
  REQUIRE(d.segments()[0].height == Catch::Approx(0.5));
  REQUIRE(d.total_mass() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("uniform region integrals equal relative areas") {
  const Simplex s = Simplex::regular(3, 2);
  Vec b(3);
  b << 0.2, 0.3, 0.5;
  const Vec x = s.point_from_barycentric(b);
  const auto d = MembraneDensity::uniform();
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto r = integrate_region(d, s, x, i);
    REQUIRE(r.exact);
    REQUIRE(r.value == Catch::Approx(b[i]).margin(1e-12));
    total += r.value;
  }
  REQUIRE(total == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("epsilon interval density") {
  SECTION("eps = 1 coincides with uniform") {
    const auto de = MembraneDensity::epsilon_interval(1.0);
    const auto du = MembraneDensity::uniform();
    for (double t : {-0.9, -0.4, 0.0, 0.3, 0.8})
      REQUIRE(region_mass(de, t, 0) == Catch::Approx(region_mass(du, t, 0)).margin(1e-12));
  }
  SECTION("eps = 1/sqrt(2) gives a breakable segment of length sqrt(2)") {
    const auto d = MembraneDensity::epsilon_interval(1.0 / std::sqrt(2.0));
    REQUIRE(d.segments().size() == 1);
    REQUIRE(d.segments()[0].hi - d.segments()[0].lo == Catch::Approx(std::sqrt(2.0)).margin(1e-12));
  }
  SECTION("mass is 1 for any eps") {
    for (double eps : {0.05, 0.3, 0.7071, 1.0})
      REQUIRE(MembraneDensity::epsilon_interval(eps).total_mass() ==
              Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("out-of-range eps rejected") {
    REQUIRE_THROWS_AS(MembraneDensity::epsilon_interval(0.0), Error);
    REQUIRE_THROWS_AS(MembraneDensity::epsilon_interval(1.5), Error);
  }
}

TEST_CASE("epsilon-model closed form reproduces the region integrals") {
  // Includes the boundary cos(theta) = eps, where the ramp reaches 1 exactly.
  for (double eps : {0.2, 0.5, 1.0 / std::sqrt(2.0), 0.9}) {
    const auto d = MembraneDensity::epsilon_interval(eps);
    for (double t : {-0.95, -eps, -0.3 * eps, 0.0, 0.7 * eps, eps, 0.97}) {
      if (t < -1.0 || t > 1.0) continue;
      for (int sign : {+1, -1}) {
        const double expected = oracles::epsilon_model_probability(eps, t, sign);
        const double got = region_mass(d, t, sign > 0 ? 0 : 1);
        REQUIRE(got == Catch::Approx(expected).margin(1e-12));
      }
    }
  }
}

TEST_CASE("piecewise densities normalize and integrate") {
  const auto d = MembraneDensity::piecewise({-1.0, -0.5, 0.5, 1.0}, {1.0, 2.0, 1.0});
  REQUIRE(d.total_mass() == Catch::Approx(1.0).margin(1e-12));
  // heights: 1/3 on the outer intervals, 2/3 in the middle (mass 0.5+2+0.5=3).
  REQUIRE(d.mass_strictly_below(-0.5) == Catch::Approx(0.5 / 3.0).margin(1e-12));
  REQUIRE(d.mass_strictly_below(0.0) == Catch::Approx((0.5 + 1.0) / 3.0).margin(1e-12));
  REQUIRE_THROWS_AS(MembraneDensity::piecewise({-1.0, 1.0}, {0.0}), Error);
  REQUIRE_THROWS_AS(MembraneDensity::piecewise({0.5, -0.5}, {1.0}), Error);
}

TEST_CASE("atomic membranes") {
  SECTION("a unit mass at zero always breaks there") {
    const auto d = MembraneDensity::atomic({0.0}, {1.0});
    RngStream rng(31, 0);
    for (int k = 0; k < 50; ++k) {
      const auto bp = sample_breakpoint(d, band(), rng);
      REQUIRE(bp.source == BreakSource::Atomic);
      REQUIRE(bp.location[0] == Catch::Approx(0.0).margin(1e-15));
    }
    // Deterministic sign rule: the atom falls on one side of the state.
    REQUIRE(region_mass(d, 0.4, 0) == Catch::Approx(1.0));
    REQUIRE(region_mass(d, -0.4, 0) == Catch::Approx(0.0));
  }
  SECTION("solipsistic endpoint masses give state-independent statistics") {
    const double p = 0.3;
    const auto d = MembraneDensity::atomic({-1.0, 1.0}, {p, 1.0 - p});
    for (double t : {-0.99, -0.5, 0.0, 0.2, 0.99}) {
      REQUIRE(region_mass(d, t, 0) == Catch::Approx(p).margin(1e-12));
      REQUIRE(region_mass(d, t, 1) == Catch::Approx(1.0 - p).margin(1e-12));
    }
  }
  SECTION("an atom exactly at the state is renormalized away and flagged") {
    const auto d = MembraneDensity::atomic({-0.5, 0.2, 0.9}, {0.25, 0.5, 0.25});
    const auto r = integrate_region(d, band(), state_at(band(), 0.2), 0);
    REQUIRE(r.renormalized_atom);
    REQUIRE(r.value == Catch::Approx(0.5).margin(1e-12));  // 0.25 / (1 - 0.5)
  }
  SECTION("all mass at the state is an unstable equilibrium") {
    const auto d = MembraneDensity::atomic({0.2}, {1.0});
    REQUIRE_THROWS_AS(integrate_region(d, band(), state_at(band(), 0.2), 0), Error);
  }
  SECTION("atoms mixed with a continuous part") {
    const auto d = MembraneDensity::atomic({0.0}, {0.5}, MembraneDensity::uniform());
    REQUIRE(d.total_mass() == Catch::Approx(1.0).margin(1e-12));
    // below t=0.5: the atom (0.5) plus 3/4 of the half-mass continuous band
    REQUIRE(region_mass(d, 0.5, 0) == Catch::Approx(0.5 + 0.5 * 0.75).margin(1e-12));
  }
  SECTION("masses must account for all the density") {
    REQUIRE_THROWS_AS(MembraneDensity::atomic({0.0}, {0.7}), Error);
  }
}

TEST_CASE("every exact variant has unit mass") {
  REQUIRE(MembraneDensity::uniform().total_mass() == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(MembraneDensity::epsilon_interval(0.3).total_mass() == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(MembraneDensity::piecewise({-1, 0, 1}, {3, 1}).total_mass() ==
          Catch::Approx(1.0).margin(1e-10));
  REQUIRE(MembraneDensity::cellular(6, {0, 2, 5}).total_mass() == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(MembraneDensity::atomic({-1, 1}, {0.4, 0.6}).total_mass() ==
          Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("inverse-CDF sampling matches the closed-form CDF") {
  // Kolmogorov-Smirnov at the 1% level, n = 1e5: critical D = 1.63 / sqrt(n).
  const auto check_ks = [](const MembraneDensity& d, auto cdf) {
    RngStream rng(37, 0);
    const int n = 100000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = d.sample_coordinate(rng).first;
    std::sort(xs.begin(), xs.end());
    double dmax = 0.0;
    for (int i = 0; i < n; ++i) {
      const double f = cdf(xs[i]);
      dmax = std::max(dmax, std::abs(f - (i + 1.0) / n));
      dmax = std::max(dmax, std::abs(f - static_cast<double>(i) / n));
    }
    REQUIRE(dmax < 1.63 / std::sqrt(static_cast<double>(n)));
  };
  check_ks(MembraneDensity::epsilon_interval(0.5),
           [](double t) { return std::clamp((t + 0.5) / 1.0, 0.0, 1.0); });
  check_ks(MembraneDensity::uniform(), [](double t) { return (t + 1.0) / 2.0; });
  check_ks(MembraneDensity::piecewise({-1.0, 0.0, 1.0}, {1.0, 3.0}), [](double t) {
    return t < 0.0 ? 0.25 * (t + 1.0) : 0.25 + 0.75 * t;
  });
}

TEST_CASE("epsilon samples stay inside the breakable band with zero mean") {
  const auto d = MembraneDensity::epsilon_interval(0.5);
  RngStream rng(41, 0);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto [t, atomic] = d.sample_coordinate(rng);
    REQUIRE_FALSE(atomic);
    REQUIRE(t >= -0.5);
    REQUIRE(t <= 0.5);
    sum += t;
  }
  const double sigma = 0.5 / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
  REQUIRE(std::abs(sum / n) < 3.0 * sigma);
}

TEST_CASE("cellular membranes") {
  SECTION("counts follow 2^n - 1") {
    REQUIRE(CellularEnumerator(1).total() == 1);
    REQUIRE(CellularEnumerator(2).total() == 3);
    REQUIRE(CellularEnumerator(4).total() == 15);
    int count = 0;
    CellularEnumerator it(4);
    while (auto d = it.next()) {
      REQUIRE(d->total_mass() == Catch::Approx(1.0).margin(1e-12));
      ++count;
    }
    REQUIRE(count == 15);
    REQUIRE_THROWS_AS(CellularEnumerator(25), Error);
  }
  SECTION("n = 1 is the uniform membrane") {
    const auto d = MembraneDensity::cellular(1, {0});
    for (double t : {-0.7, 0.0, 0.4})
      REQUIRE(region_mass(d, t, 0) == Catch::Approx(0.5 * (1.0 + t)).margin(1e-12));
  }
  SECTION("the empty breakable set is excluded") {
    REQUIRE_THROWS_AS(MembraneDensity::cellular(4, {}), Error);
  }
}

TEST_CASE("cellular averages approach the uniform answer") {
  SECTION("symmetric state gives exactly one half") {
    for (int n : {2, 4, 8}) {
      const Vec avg = cellular_average_probability(n, 0.0);
      REQUIRE(avg[0] == Catch::Approx(0.5).margin(1e-12));
    }
  }
  SECTION("a vertex state is certain under every membrane") {
    const Vec avg = cellular_average_probability(6, 1.0);
    REQUIRE(avg[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(avg[1] == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("enumeration agrees with the combinatorial closed form") {
    for (int n : {3, 5, 8, 11}) {
      for (double t : {-0.63, 0.2, 0.4, 0.77}) {
        const double mine = cellular_average_probability(n, t)[0];
        const double oracle = oracles::cellular_average_combinatorial(n, t);
        REQUIRE(mine == Catch::Approx(oracle).margin(1e-11));
      }
    }
  }
  SECTION("equal-cell averages hit the Born value exactly at every n") {
    // Picking a membrane uniformly among non-empty subsets and then a break
    // cell uniformly within it makes the break-cell marginal uniform over all
    // n cells, so the average equals the uniform-membrane value identically
    // (up to summation round-off), not merely in the n -> infinity limit.
    for (double t : {0.2, 0.4, 0.7}) {
      const double born = 0.5 * (1.0 + t);
      for (int n : {4, 8, 12, 16})
        REQUIRE(std::abs(cellular_average_probability(n, t)[0] - born) < 1e-12);
    }
  }
  SECTION("the per-membrane spread shrinks with the cell count") {
    for (double t : {0.2, 0.4, 0.7}) {
      const auto coarse = cellular_average_stats(4, t);
      const auto fine = cellular_average_stats(16, t);
      REQUIRE(fine.mean_abs_dev < coarse.mean_abs_dev);
      REQUIRE(fine.mean_abs_dev > 0.0);
      REQUIRE(std::abs(coarse.mean - 0.5 * (1.0 + t)) < 1e-12);
    }
  }
  SECTION("sampled averages with many cells land near the Born value") {
    RngStream rng(43, 0);
    const double t = 0.4;
    double sum = 0.0;
    const int membranes = 2000;
    for (int k = 0; k < membranes; ++k)
      sum += cellular_outcome_probability(sample_cellular(500, rng), t);
    REQUIRE(std::abs(sum / membranes - 0.7) < 0.01);
  }
}

TEST_CASE("exact kernels agree with Monte Carlo frequencies") {
  const struct {
    MembraneDensity density;
    double t;
  } cases[] = {
      {MembraneDensity::uniform(), 0.3},
      {MembraneDensity::epsilon_interval(0.6), 0.2},
      {MembraneDensity::piecewise({-1.0, -0.2, 0.7, 1.0}, {1.0, 0.5, 2.0}), -0.1},
      {MembraneDensity::cellular(8, {1, 4, 6}), 0.25},
      {MembraneDensity::atomic({-0.8, 0.5}, {0.3, 0.2}, MembraneDensity::uniform()), 0.1},
  };
  int case_id = 0;
  for (const auto& c : cases) {
    const double exact = region_mass(c.density, c.t, 0);
    RngStream rng(47, static_cast<std::uint64_t>(case_id++));
    const int n = 100000;
    int hits = 0;
    const Vec bx = band().barycentric(state_at(band(), c.t));
    for (int k = 0; k < n; ++k) {
      const auto bp = sample_breakpoint(c.density, band(), rng);
      const auto r = gtr::detail::region_from_barycentric(bx, band().barycentric(bp.location));
      hits += (r.index == 0);
    }
    const double freq = static_cast<double>(hits) / n;
    const double sigma = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / n);
    REQUIRE(std::abs(freq - exact) < 3.0 * sigma + 1e-9);
  }
}

TEST_CASE("general sampled densities") {
  SECTION("the constant evaluator reproduces the uniform membrane") {
    const Simplex s = Simplex::regular(3, 2);
    Vec b(3);
    b << 0.5, 0.3, 0.2;
    const Vec x = s.point_from_barycentric(b);
    const auto d = MembraneDensity::general([](const Vec&) { return 1.0; }, 1.0);
    McConfig cfg;
    cfg.budget = 200000;
    cfg.stream = RngStream(53, 0);
    const auto r = integrate_region(d, s, x, 0, cfg);
    REQUIRE_FALSE(r.exact);
    REQUIRE(std::abs(r.value - 0.5) < 3.0 * r.std_error + 1e-9);
  }
  SECTION("a tilted density shifts the sub-region masses") {
    // Density proportional to the first barycentric coordinate: w = 3*b0.
    const Simplex s = Simplex::regular(3, 2);
    const auto d = MembraneDensity::general([](const Vec& b) { return 3.0 * b[0]; }, 3.0);
    const Vec x = s.point_from_barycentric(Vec::Constant(3, 1.0 / 3.0));
    McConfig cfg;
    cfg.budget = 400000;
    cfg.stream = RngStream(59, 0);
    const double p0 = integrate_region(d, s, x, 0, cfg).value;
    const double p1 = integrate_region(d, s, x, 1, cfg).value;
    const double p2 = integrate_region(d, s, x, 2, cfg).value;
    // Mass near vertex 0 lies in the regions anchored by the other vertices:
    // exact values are E[3 b0; b_j minimal] = 1/9, 4/9, 4/9.
    REQUIRE(std::abs(p0 - 1.0 / 9.0) < 0.005);
    REQUIRE(std::abs(p1 - 4.0 / 9.0) < 0.005);
    // The same sample set serves every region, so the estimates add up to the
    // total-mass estimate.
    REQUIRE(std::abs(p0 + p1 + p2 - 1.0) < 0.01);
    // Rejection sampling agrees with the importance-weighted integral.
    RngStream rng(61, 0);
    const Vec bx = s.barycentric(x);
    int hits = 0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const auto bp = sample_breakpoint(d, s, rng);
      hits += gtr::detail::region_from_barycentric(bx, s.barycentric(bp.location)).index == 0;
    }
    const double freq = static_cast<double>(hits) / n;
    REQUIRE(std::abs(freq - p0) < 0.01);
  }
  SECTION("unreachable error targets raise BudgetExceeded") {
    const Simplex s = Simplex::regular(3, 2);
    const auto d = MembraneDensity::general([](const Vec& b) { return 3.0 * b[1]; }, 3.0);
    McConfig cfg;
    cfg.budget = 2000;
    cfg.target_stderr = 1e-8;
    cfg.stream = RngStream(67, 0);
    REQUIRE_THROWS_AS(integrate_region(d, s, s.point_from_barycentric(Vec::Constant(3, 1.0 / 3.0)),
                                       0, cfg),
                      Error);
  }
  SECTION("a hopeless sup bound stalls rejection sampling") {
    const Simplex s = Simplex::regular(2, 1);
    const auto d = MembraneDensity::general([](const Vec&) { return 1e-9; }, 1.0);
    RngStream rng(71, 0);
    REQUIRE_THROWS_AS(sample_breakpoint(d, s, rng), Error);
  }
}

TEST_CASE("barycentric grid cells partition the triangle") {
  RngStream rng(73, 0);
  for (int r : {1, 2, 3, 5}) {
    // sampling inside a cell returns the same cell id
    for (int id = 0; id < gtr::detail::grid_cell_count(r); ++id) {
      const auto cell = gtr::detail::grid_cell(r, id);
      for (int k = 0; k < 20; ++k) {
        const Vec b = gtr::detail::sample_in_triangle(cell, rng);
        REQUIRE(gtr::detail::grid_cell_of(r, b) == id);
      }
    }
    // uniform samples hit each cell with equal frequency
    const int n = 20000;
    std::vector<int> counts(gtr::detail::grid_cell_count(r), 0);
    for (int k = 0; k < n; ++k)
      ++counts[gtr::detail::grid_cell_of(r, gtr::detail::dirichlet_uniform(3, rng))];
    const double expected = static_cast<double>(n) / counts.size();
    for (int c : counts)
      REQUIRE(std::abs(c - expected) < 5.0 * std::sqrt(expected));
  }
}

TEST_CASE("cellular grid sampling stays inside breakable cells") {
  const Simplex s = Simplex::regular(3, 2);
  const auto d = MembraneDensity::cellular_grid(3, {0, 4, 7});
  RngStream rng(79, 0);
  for (int k = 0; k < 200; ++k) {
    const auto bp = sample_breakpoint(d, s, rng);
    const int cell = gtr::detail::grid_cell_of(3, s.barycentric(bp.location));
    REQUIRE((cell == 0 || cell == 4 || cell == 7));
  }
}
