#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "gtr/density.hpp"
#include "gtr/geometry.hpp"
#include "gtr/rng.hpp"
#include "support/oracles.hpp"

using namespace gtr;

namespace {

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("regular 1-simplex is the pair of unit endpoints") {
  const Simplex s = Simplex::regular(2, 1);
  REQUIRE(s.vertex(0)[0] == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(s.vertex(1)[0] == Catch::Approx(-1.0).margin(1e-15));
}

TEST_CASE("regular simplex invariants hold for all small N") {
  RngStream rng(11, 0);
  for (int n = 2; n <= 8; ++n) {
    const int m = n + 1;  // some slack in the ambient dimension
    std::vector<GivensRotation> rot;
    for (int k = 0; k < 4; ++k)
      rot.push_back({static_cast<int>(rng.below(m)),
                     static_cast<int>((rng.below(m - 1) + 1 + rng.below(m)) % m), 0.0});
    for (auto& g : rot) {
      if (g.axis_a == g.axis_b) g.axis_b = (g.axis_a + 1) % m;
      g.angle = rng.uniform(-3.0, 3.0);
    }
    const Simplex s = Simplex::regular(n, m, rot);
    for (int i = 0; i < n; ++i) REQUIRE(s.vertex(i).norm() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(s.vertices().rowwise().sum().norm() < 1e-12);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        REQUIRE(s.vertex(i).dot(s.vertex(j)) == Catch::Approx(-1.0 / (n - 1)).margin(1e-12));
  }
}

TEST_CASE("tetrahedron vertices have pairwise dot -1/3") {
  const Simplex s = Simplex::regular(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      REQUIRE(s.vertex(i).dot(s.vertex(j)) == Catch::Approx(-1.0 / 3.0).margin(1e-12));
}

TEST_CASE("dimension mismatch is rejected") {
  REQUIRE_THROWS_AS(Simplex::regular(4, 2), Error);
  try {
    Simplex::regular(4, 2);
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::dimension_mismatch);
  }
}

TEST_CASE("orientation by Givens rotation moves vertex 0 as expected") {
  const double theta = 0.7;
  const Simplex s = Simplex::regular(2, 2, {{0, 1, theta}});
  REQUIRE(s.vertex(0)[0] == Catch::Approx(std::cos(theta)).margin(1e-14));
  REQUIRE(s.vertex(0)[1] == Catch::Approx(std::sin(theta)).margin(1e-14));
}

TEST_CASE("orientation by an explicit orthogonal frame") {
  const double theta = 1.1;
  Mat frame(2, 2);
  frame << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  const Simplex s = Simplex::regular_framed(2, 2, frame);
  REQUIRE(s.vertex(0)[0] == Catch::Approx(std::cos(theta)).margin(1e-14));
  REQUIRE(s.vertex(0)[1] == Catch::Approx(std::sin(theta)).margin(1e-14));
  Mat skew(2, 2);
  skew << 1.0, 0.5, 0.0, 1.0;
  REQUIRE_THROWS_AS(Simplex::regular_framed(2, 2, skew), Error);
  REQUIRE_THROWS_AS(Simplex::regular_framed(3, 2, Mat::Identity(3, 3)), Error);
}

TEST_CASE("projection fixes vertices and the origin") {
  const Simplex s = Simplex::regular(3, 4);
  for (int i = 0; i < 3; ++i)
    REQUIRE((s.project_onto(s.vertex(i)) - s.vertex(i)).norm() < 1e-12);
  const Vec origin = Vec::Zero(4);
  REQUIRE(s.project_onto(origin).norm() < 1e-12);
}

TEST_CASE("two-outcome projection is the dot-product formula") {
  const Simplex s = Simplex::regular(2, 2);
  for (double theta : {0.0, 0.3, 1.1, 2.0, 3.0}) {
    const Vec x = vec2(std::cos(theta), std::sin(theta));
    const Vec p = s.project_onto(x);
    REQUIRE((p - std::cos(theta) * s.vertex(0)).norm() < 1e-12);
  }
}

TEST_CASE("projection is idempotent") {
  RngStream rng(3, 1);
  const Simplex s = Simplex::regular(3, 5);
  for (int k = 0; k < 200; ++k) {
    Vec x(5);
    for (int i = 0; i < 5; ++i) x[i] = rng.uniform(-0.5, 0.5);
    if (x.norm() > 1.0) x /= x.norm() * 1.01;
    Vec p;
    try {
      p = s.project_onto(x);
    } catch (const Error&) {
      continue;  // confined state; not part of this property
    }
    REQUIRE((s.project_onto(p) - p).norm() < 1e-12);
  }
}

TEST_CASE("states projecting outside the membrane are rejected") {
  const Simplex s = Simplex::regular(3, 2);
  const Vec anti = -s.vertex(0);  // barycentric (-1/3, 2/3, 2/3)
  REQUIRE_THROWS_AS(s.project_onto(anti), Error);
  try {
    s.project_onto(anti);
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::projection_outside_membrane);
  }
}

TEST_CASE("states outside the unit ball are invalid") {
  const Simplex s = Simplex::regular(2, 2);
  REQUIRE_THROWS_AS(s.project_onto(vec2(1.2, 0.4)), Error);
}

TEST_CASE("barycentric of vertices and centroid") {
  const Simplex s = Simplex::regular(3, 2);
  const Vec b = s.barycentric(s.vertex(1));
  REQUIRE(b[0] == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(b[1] == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(b[2] == Catch::Approx(0.0).margin(1e-12));
  const Vec c = s.barycentric(Vec::Zero(2));
  for (int i = 0; i < 3; ++i) REQUIRE(c[i] == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("random convex combinations round-trip") {
  RngStream rng(17, 0);
  for (int n : {2, 3, 4, 6}) {
    const Simplex s = Simplex::regular(n, n + 2);
    for (int k = 0; k < 100; ++k) {
      const Vec b = gtr::detail::dirichlet_uniform(n, rng);
      const Vec p = s.point_from_barycentric(b);
      const Vec back = s.barycentric(p);
      REQUIRE((back - b).cwiseAbs().maxCoeff() < 1e-10);
      REQUIRE((s.point_from_barycentric(back) - p).norm() < 1e-10);
      REQUIRE(back.sum() == Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("points off the simplex are flagged") {
  const Simplex s = Simplex::regular(3, 2);
  const Vec outside = 1.2 * s.vertex(0) - 0.2 * s.vertex(1);
  REQUIRE_THROWS_AS(s.barycentric(outside), Error);
}

TEST_CASE("a break point at an anchor vertex ties between the adjacent regions") {
  // Breaking at anchor x_i detaches x_i, so the outcome can never be i; the
  // vertex sits on the tension surface between the two regions it anchors.
  const Simplex s = Simplex::regular(3, 2);
  const Vec centroid = Vec::Zero(2);
  for (int i = 0; i < 3; ++i) {
    const auto r = region_of(s, centroid, s.vertex(i));
    REQUIRE(r.tie);
    REQUIRE(r.index != i);
    REQUIRE(r.index == (i == 0 ? 1 : 0));  // lowest adjacent index wins
  }
  // Just inside a region near vertex i, the win is unambiguous and is the
  // region whose own anchor lies farthest away.
  for (int i = 0; i < 3; ++i) {
    Vec b(3);
    b[i] = 0.90;
    b[(i + 1) % 3] = 0.07;
    b[(i + 2) % 3] = 0.03;
    const auto r = region_of(s, centroid, s.point_from_barycentric(b));
    REQUIRE_FALSE(r.tie);
    REQUIRE(r.index == (i + 2) % 3);
  }
}

TEST_CASE("the apex point ties across every region") {
  const Simplex s = Simplex::regular(3, 2);
  Vec b(3);
  b << 0.2, 0.3, 0.5;
  const Vec x = s.point_from_barycentric(b);
  const auto r = region_of(s, x, x);
  REQUIRE(r.tie);
  REQUIRE(r.index == 0);  // ties resolve to the lowest index
}

TEST_CASE("on-face states cannot partition the membrane") {
  const Simplex s = Simplex::regular(3, 2);
  const Vec edge_mid = 0.5 * (s.vertex(0) + s.vertex(1));
  REQUIRE_THROWS_AS(region_of(s, edge_mid, Vec::Zero(2)), Error);
  try {
    region_of(s, edge_mid, Vec::Zero(2));
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::degenerate_state);
  }
}

TEST_CASE("argmin rule agrees with the convex-hull membership oracle") {
  RngStream rng(23, 0);
  const Simplex s = Simplex::regular(3, 2);
  int ties = 0;
  for (int k = 0; k < 10000; ++k) {
    const Vec bx = gtr::detail::dirichlet_uniform(3, rng);
    if (bx.minCoeff() < 1e-6) continue;
    const Vec by = gtr::detail::dirichlet_uniform(3, rng);
    const Vec x = s.point_from_barycentric(bx);
    const Vec y = s.point_from_barycentric(by);
    const auto r = region_of(s, x, y);
    if (r.tie) {
      ++ties;
      continue;
    }
    for (int i = 0; i < 3; ++i) {
      const bool member = oracles::in_subregion(s, x, y, i);
      REQUIRE(member == (i == r.index));
    }
  }
  REQUIRE(ties < 10);  // ties live on a measure-zero set
}

TEST_CASE("sub-region measures equal barycentric coordinates") {
  const Simplex s = Simplex::regular(3, 2);
  Vec b(3);
  b << 0.2, 0.3, 0.5;
  const Vec x = s.point_from_barycentric(b);
  const Vec mu = subregion_measures(s, x);
  for (int i = 0; i < 3; ++i) REQUIRE(mu[i] == Catch::Approx(b[i]).margin(1e-12));
}

TEST_CASE("Monte Carlo areas match the measure lemma") {
  RngStream rng(29, 0);
  const Simplex s = Simplex::regular(3, 2);
  Vec b(3);
  b << 0.2, 0.3, 0.5;
  const Vec x = s.point_from_barycentric(b);
  const Vec bx = s.barycentric(x);
  const int n = 1000000;
  int counts[3] = {0, 0, 0};
  int ties = 0;
  for (int k = 0; k < n; ++k) {
    const Vec by = gtr::detail::dirichlet_uniform(3, rng);
    const auto r = gtr::detail::region_from_barycentric(bx, by);
    ++counts[r.index];
    ties += r.tie ? 1 : 0;
  }
  for (int i = 0; i < 3; ++i) {
    const double freq = static_cast<double>(counts[i]) / n;
    const double sigma = std::sqrt(b[i] * (1.0 - b[i]) / n);
    REQUIRE(std::abs(freq - b[i]) < 3.0 * sigma);
  }
  REQUIRE(static_cast<double>(ties) / n < 1e-3);
}

TEST_CASE("volumes of the segment and triangle") {
  REQUIRE(Simplex::regular(2, 1).volume() == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(Simplex::regular(3, 2).volume() == Catch::Approx(3.0 * std::sqrt(3.0) / 4.0).margin(1e-12));
}

TEST_CASE("canonical normal is orthogonal to the span") {
  const Simplex s = Simplex::regular(3, 4);
  const Vec n = s.canonical_normal();
  REQUIRE(n.norm() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(s.span_projection(n).norm() < 1e-10);
  REQUIRE_THROWS_AS(Simplex::regular(3, 2).canonical_normal(), Error);
}
