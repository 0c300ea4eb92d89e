#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "bellows/error.hpp"
#include "bellows/invariants.hpp"
#include "bellows/octahedron.hpp"
#include "bellows/surface.hpp"

using namespace bellows;

namespace {

const double kPi = std::acos(-1.0);

PolyhedralSurface corner_tetra() {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<std::array<int, 3>> f = {
      {1, 2, 3}, {0, 2, 1}, {0, 3, 2}, {0, 1, 3}};
  return build_surface(v, f, {});
}

PolyhedralSurface unit_cube() {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                         {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  std::vector<std::array<int, 3>> f;
  auto quad = [&](int a, int b, int c, int d) {
    f.push_back({a, b, c});
    f.push_back({a, c, d});
  };
  quad(0, 3, 2, 1);
  quad(4, 5, 6, 7);
  quad(0, 1, 5, 4);
  quad(1, 2, 6, 5);
  quad(2, 3, 7, 6);
  quad(3, 0, 4, 7);
  return build_surface(v, f, {});
}

PolyhedralSurface doubly_covered_square() {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  std::vector<std::array<int, 3>> f = {
      {0, 1, 2}, {0, 2, 3}, {1, 0, 3}, {1, 3, 2}};
  return build_surface(v, f, {});
}

PolyhedralSurface regular_octahedron() {
  std::vector<Vec3> v = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                         {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  std::vector<std::array<int, 3>> f = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4},
                                       {3, 0, 4}, {2, 0, 5}, {1, 2, 5},
                                       {3, 1, 5}, {0, 3, 5}};
  return build_surface(v, f, {});
}

PolyhedralSurface reversed(PolyhedralSurface s) {
  for (auto& f : s.faces) std::swap(f[0], f[1]);
  return build_surface(s.vertices, s.faces, s.labels);
}

double wrap2pi(double a) {
  a = std::fmod(a, 2 * kPi);
  if (a < 0) a += 2 * kPi;
  return a;
}

double arc_point(double lo, double hi, double frac) {
  double span = wrap2pi(hi - lo);
  if (span == 0) span = 2 * kPi;
  return wrap2pi(lo + frac * span);
}

const Type1Params kT1{5, 11, 12, 10, 10, 12, 6.1};
const Type2Params kT2{4, 6, 7, 8, 8, 7, 5.5};

std::vector<PolyhedralSurface> type1_path(int n) {
  auto r = type1_flex_range(kT1);
  std::vector<PolyhedralSurface> path;
  for (int k = 0; k <= n; ++k) {
    Type1Params q = kT1;
    q.t = arc_point(r.first, r.second, 0.02 + 0.96 * k / double(n));
    path.push_back(bricard_type1(q));
  }
  return path;
}

std::vector<PolyhedralSurface> type2_path(int n) {
  auto r = type2_flex_range(kT2);
  std::vector<PolyhedralSurface> path;
  for (int k = 0; k <= n; ++k) {
    Type2Params q = kT2;
    q.t = arc_point(r.first, r.second, 0.02 + 0.96 * k / double(n));
    path.push_back(bricard_type2(q));
  }
  return path;
}

// Sum of two tracked branches at every sample; requires the drift to stay
// below tol and returns the mid value.
double pair_sum(const PolyhedralSurface& s0,
                const std::vector<DihedralBranch>& br, int u1, int v1, int u2,
                int v2, double tol) {
  const int ea = s0.edge_index(u1, v1);
  const int eb = s0.edge_index(u2, v2);
  double mn = 1e300, mx = -1e300;
  for (size_t k = 0; k < br[ea].values.size(); ++k) {
    const double s = br[ea].values[k] + br[eb].values[k];
    mn = std::min(mn, s);
    mx = std::max(mx, s);
  }
  CHECK(mx - mn < tol);
  return (mn + mx) / 2;
}

}  // namespace

TEST_CASE("dihedral angles of reference solids") {
  auto cube = unit_cube();
  CHECK(dihedral_value(cube, cube.edge_index(0, 1)) ==
        doctest::Approx(kPi / 2).epsilon(1e-14));
  // face diagonal: coplanar faces on opposite sides
  CHECK(dihedral_value(cube, cube.edge_index(0, 2)) ==
        doctest::Approx(kPi).epsilon(1e-14));

  auto rcube = reversed(cube);
  CHECK(dihedral_value(rcube, rcube.edge_index(0, 1)) ==
        doctest::Approx(3 * kPi / 2).epsilon(1e-14));

  auto tetra = corner_tetra();
  CHECK(dihedral_value(tetra, tetra.edge_index(0, 1)) == kPi / 2);
  CHECK(dihedral_value(tetra, tetra.edge_index(1, 2)) ==
        doctest::Approx(std::acos(1 / std::sqrt(3.0))).epsilon(1e-14));

  auto d = dihedral_angle(tetra, tetra.edge_index(0, 3));
  CHECK(d.edge == tetra.edge_index(0, 3));
  CHECK(norm(d.n1) == doctest::Approx(1).epsilon(1e-14));
  CHECK(norm(d.n2) == doctest::Approx(1).epsilon(1e-14));

  CHECK_THROWS_WITH_AS(dihedral_angle(tetra, 99), doctest::Contains("edge"),
                       Error);
  auto broken = tetra;
  broken.vertices[1] = broken.vertices[0];
  CHECK_THROWS_AS(dihedral_angle(broken, broken.edge_index(0, 1)), Error);
}

TEST_CASE("doubly covered edges against flat ones") {
  auto q = doubly_covered_square();
  // boundary edges fold the sheet onto itself
  for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {2, 3}, {0, 3}}) {
    auto d = dihedral_angle(q, q.edge_index(a, b));
    CHECK(d.alpha0 == 2 * kPi);
    CHECK(norm(d.n1 - d.n2) == 0.0);
  }
  // interior diagonals of either sheet are flat
  for (auto [a, b] : {std::pair{0, 2}, {1, 3}}) {
    auto d = dihedral_angle(q, q.edge_index(a, b));
    CHECK(d.alpha0 == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(norm(d.n1 + d.n2) < 1e-14);
  }
  CHECK(oriented_volume(q) == 0.0);
}

TEST_CASE("dihedral invariance under rigid motion") {
  auto cube = unit_cube();
  auto moved = cube;
  const double c = std::cos(0.7), s = std::sin(0.7);
  for (auto& p : moved.vertices) {
    Vec3 a{p.x, c * p.y - s * p.z, s * p.y + c * p.z};
    p = Vec3{c * a.x + s * a.y, -s * a.x + c * a.y, a.z} + Vec3{0.3, -1.2, 2.5};
  }
  for (int e = 0; e < int(cube.edges.size()); ++e) {
    CHECK(std::abs(dihedral_value(cube, e) - dihedral_value(moved, e)) < 1e-12);
  }
  // orientation reversal maps alpha to 2 pi - alpha
  auto rcube = reversed(cube);
  for (int e = 0; e < int(cube.edges.size()); ++e) {
    CHECK(wrap2pi(dihedral_value(cube, e) + dihedral_value(rcube, e)) <
          1e-12);
  }
}

TEST_CASE("volume, mean curvature and dehn vectors of reference solids") {
  auto cube = unit_cube();
  CHECK(oriented_volume(cube) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(total_mean_curvature(cube) == doctest::Approx(6 * kPi).epsilon(1e-14));

  auto big = cube;
  for (auto& p : big.vertices) p = p * 2.0;
  CHECK(oriented_volume(big) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(total_mean_curvature(big) == doctest::Approx(12 * kPi).epsilon(1e-14));

  auto rcube = reversed(cube);
  CHECK(oriented_volume(rcube) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(total_mean_curvature(rcube) ==
        doctest::Approx(-6 * kPi).epsilon(1e-14));

  auto tetra = corner_tetra();
  CHECK(oriented_volume(tetra) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  const double slant = std::acos(1 / std::sqrt(3.0));
  const double expect =
      3 * (kPi - kPi / 2) + 3 * std::sqrt(2.0) * (kPi - slant);
  CHECK(total_mean_curvature(tetra) == doctest::Approx(expect).epsilon(1e-14));

  // translation invariance of the volume
  auto shifted = cube;
  for (auto& p : shifted.vertices) p = p + Vec3{17, -3, 5};
  CHECK(oriented_volume(shifted) == doctest::Approx(1.0).epsilon(1e-12));

  auto dv = dehn_vector(cube);
  REQUIRE(dv.entries.size() == cube.edges.size());
  int unit_edges = 0, diag_edges = 0;
  for (const auto& [len, alpha] : dv.entries) {
    if (std::abs(len - 1) < 1e-12) {
      ++unit_edges;
      CHECK(alpha == doctest::Approx(kPi / 2).epsilon(1e-13));
    } else {
      ++diag_edges;
      CHECK(len == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
      CHECK(alpha == doctest::Approx(kPi).epsilon(1e-13));
    }
  }
  CHECK(unit_edges == 12);
  CHECK(diag_edges == 6);

  CHECK_THROWS_WITH_AS(total_mean_curvature(cube, {1.0, 2.0}),
                       doctest::Contains("one angle per edge"), Error);
}

TEST_CASE("vertex links of reference solids") {
  auto tetra = corner_tetra();
  auto lk = vertex_link(tetra, 0, 0.5);
  CHECK(lk.vertex == 0);
  CHECK(lk.radius == 0.5);
  REQUIRE(lk.ring == std::vector<int>{1, 3, 2});
  for (double a : lk.arcs) CHECK(a == doctest::Approx(kPi / 2).epsilon(1e-14));
  for (double a : lk.interior)
    CHECK(a == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(link_convexity(lk) == LinkShape::convex);

  auto cube = unit_cube();
  auto cl = vertex_link(cube, 0, 0.5);
  REQUIRE(cl.ring == std::vector<int>{1, 5, 4, 3, 2});
  const std::vector<double> arcs = {kPi / 4, kPi / 4, kPi / 2, kPi / 4,
                                    kPi / 4};
  const std::vector<double> ints = {kPi / 2, kPi, kPi / 2, kPi / 2, kPi};
  for (int i = 0; i < 5; ++i) {
    CHECK(cl.arcs[i] == doctest::Approx(arcs[i]).epsilon(1e-13));
    CHECK(cl.interior[i] == doctest::Approx(ints[i]).epsilon(1e-13));
    CHECK(cl.arcs[i] > 0);
    CHECK(cl.arcs[i] < kPi);
  }
  CHECK(link_convexity(cl) == LinkShape::convex);

  auto oct = regular_octahedron();
  auto ol = vertex_link(oct, 4, 0.9);
  REQUIRE(ol.ring.size() == 4);
  for (double a : ol.arcs) CHECK(a == doctest::Approx(kPi / 3).epsilon(1e-13));
  for (double a : ol.interior)
    CHECK(a == doctest::Approx(std::acos(-1.0 / 3)).epsilon(1e-13));
  CHECK(link_convexity(ol) == LinkShape::convex);

  CHECK_THROWS_WITH_AS(vertex_link(tetra, 0, 1.0),
                       doctest::Contains("radius"), Error);
  CHECK_THROWS_WITH_AS(vertex_link(tetra, 0, 0.0),
                       doctest::Contains("positive"), Error);
  CHECK_THROWS_AS(vertex_link(tetra, 9, 0.5), Error);
}

TEST_CASE("links of the flat tangent octahedron") {
  Type3FlatParams p;
  p.rho_c = 1.0;
  p.rho_b = 0.5;
  p.normal_angles = {0.0, 2.0, 3.9, 2 * kPi - 1.9};
  auto res = bricard_type3_flat(p);
  auto lab = labels_from_surface(res.surface);

  for (int v : {lab.a1, lab.a2, lab.b1, lab.b2}) {
    auto lk = vertex_link(res.surface, v, 1e-3);
    REQUIRE(lk.arcs.size() == 4);
    CHECK(link_convexity(lk) == LinkShape::degenerate_flat);
    // spherical isogram: opposite sides of the link are equal
    CHECK(lk.arcs[0] == doctest::Approx(lk.arcs[2]).epsilon(1e-12));
    CHECK(lk.arcs[1] == doctest::Approx(lk.arcs[3]).epsilon(1e-12));
  }
  for (int v : {lab.c1, lab.c2}) {
    auto lk = vertex_link(res.surface, v, 1e-3);
    REQUIRE(lk.arcs.size() == 4);
    CHECK(link_convexity(lk) == LinkShape::degenerate_flat);
    // at the C vertices opposite plane angles are supplementary instead
    CHECK(lk.arcs[0] + lk.arcs[2] == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(lk.arcs[1] + lk.arcs[3] == doctest::Approx(kPi).epsilon(1e-12));
  }
  // every dihedral of the flat position is either flat or doubly covered
  for (int e = 0; e < int(res.surface.edges.size()); ++e) {
    const double a = dihedral_value(res.surface, e);
    const double d = std::min(std::abs(a - kPi), std::abs(a - 2 * kPi));
    CHECK(d < 1e-9);
  }
}

TEST_CASE("branch tracking along a type-1 flex") {
  auto path = type1_path(20);
  auto br = track_branches(path);
  REQUIRE(br.size() == path.front().edges.size());

  // some edge must cross the principal-value wrap on this path
  bool wrapped = false;
  for (const auto& b : br) {
    for (int off : b.offsets) {
      if (off != 0) wrapped = true;
    }
    for (size_t k = 1; k < b.values.size(); ++k) {
      CHECK(std::abs(b.values[k] - b.values[k - 1]) < kPi);
    }
    CHECK(b.values.front() == dihedral_value(path.front(), b.edge));
    CHECK(b.offsets.front() == 0);
  }
  CHECK(wrapped);

  // oracle: re-tracking at 10x sampling density agrees on the shared grid
  auto fine = track_branches(type1_path(200));
  for (const auto& b : br) {
    for (size_t k = 0; k < b.values.size(); ++k) {
      CHECK(b.values[k] ==
            doctest::Approx(fine[b.edge].values[10 * k]).epsilon(1e-9));
    }
  }

  // constant path: constant branches, zero offsets
  auto cpath = std::vector<PolyhedralSurface>{path[3], path[3], path[3]};
  for (const auto& b : track_branches(cpath)) {
    CHECK(b.values[0] == b.values[1]);
    CHECK(b.values[1] == b.values[2]);
    CHECK(b.offsets[1] == 0);
    CHECK(b.offsets[2] == 0);
  }

  CHECK_THROWS_WITH_AS(track_branches({}), doctest::Contains("samples"),
                       Error);
  CHECK_THROWS_WITH_AS(track_branches({path[0], corner_tetra()}),
                       doctest::Contains("combinatorially"), Error);
}

TEST_CASE("a step near the attribution limit is ambiguous") {
  auto tetra = corner_tetra();
  auto mirrored = tetra;
  for (auto& p : mirrored.vertices) p = -p;
  // the right-angle edges move from pi/2 to 3pi/2, exactly the pi limit
  CHECK_THROWS_WITH_AS(track_branches({tetra, mirrored}),
                       doctest::Contains("resample"), Error);
}

TEST_CASE("opposite-edge angle sums along a type-1 flex") {
  auto path = type1_path(20);
  const auto& s0 = path.front();
  auto lab = labels_from_surface(s0);
  auto br = track_branches(path);

  const std::array<std::array<int, 4>, 6> pairs = {{
      {lab.a1, lab.b1, lab.a2, lab.b2},
      {lab.a1, lab.b2, lab.a2, lab.b1},
      {lab.a1, lab.c1, lab.a2, lab.c2},
      {lab.a1, lab.c2, lab.a2, lab.c1},
      {lab.b1, lab.c1, lab.b2, lab.c2},
      {lab.b1, lab.c2, lab.b2, lab.c1},
  }};
  for (const auto& [u1, v1, u2, v2] : pairs) {
    const double sum = pair_sum(s0, br, u1, v1, u2, v2, 1e-9);
    // the multiple of 2 pi is measured, not assumed; this instance gives 1
    CHECK(sum == doctest::Approx(2 * kPi).epsilon(1e-9));
  }
}

TEST_CASE("mirror-pair angle sums along a type-2 flex") {
  auto path = type2_path(20);
  const auto& s0 = path.front();
  auto lab = labels_from_surface(s0);
  auto br = track_branches(path);

  const std::array<std::array<int, 4>, 6> pairs = {{
      {lab.a1, lab.b1, lab.a2, lab.b1},
      {lab.a1, lab.b2, lab.a2, lab.b2},
      {lab.b1, lab.c1, lab.b1, lab.c2},
      {lab.b2, lab.c1, lab.b2, lab.c2},
      {lab.a1, lab.c1, lab.a2, lab.c2},
      {lab.a1, lab.c2, lab.a2, lab.c1},
  }};
  for (const auto& [u1, v1, u2, v2] : pairs) {
    const double sum = pair_sum(s0, br, u1, v1, u2, v2, 1e-9);
    // a multiple of pi as the mirror argument demands; here it is even
    CHECK(sum / kPi == doctest::Approx(std::round(sum / kPi)).epsilon(1e-10));
    CHECK(sum == doctest::Approx(2 * kPi).epsilon(1e-9));
  }
}

TEST_CASE("volume and mean curvature are flex invariants") {
  for (int type : {1, 2}) {
    auto path = type == 1 ? type1_path(20) : type2_path(20);
    auto br = track_branches(path);
    const double diam = path.front().diameter();

    double vmin = 1e300, vmax = -1e300, tmin = 1e300, tmax = -1e300;
    for (size_t k = 0; k < path.size(); ++k) {
      std::vector<double> alphas;
      for (const auto& b : br) alphas.push_back(b.values[k]);
      const double v = oriented_volume(path[k]);
      const double tm = total_mean_curvature(path[k], alphas);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
      tmin = std::min(tmin, tm);
      tmax = std::max(tmax, tm);
    }
    CHECK(vmax - vmin < 1e-9 * diam * diam * diam);
    CHECK(tmax - tmin < 1e-9 * diam);
    // both constructions happen to close up with zero totals
    CHECK(std::abs(vmax) < 1e-9 * diam * diam * diam);
    CHECK(std::abs(tmax) < 1e-8);
  }
}

TEST_CASE("link arc lengths are rigid along the flex") {
  auto path = type1_path(8);
  auto lab = labels_from_surface(path.front());
  for (int v : lab.all()) {
    auto ref = vertex_link(path.front(), v, 1e-2);
    for (const auto& s : path) {
      auto lk = vertex_link(s, v, 1e-2);
      REQUIRE(lk.ring == ref.ring);
      for (size_t i = 0; i < ref.arcs.size(); ++i) {
        CHECK(std::abs(lk.arcs[i] - ref.arcs[i]) < 1e-12);
      }
    }
  }
}

TEST_CASE("equator dehn sums") {
  auto s1 = bricard_type1(kT1);
  auto s2 = bricard_type2(kT2);
  for (const auto& s : {s1, s2}) {
    auto lab = labels_from_surface(s);
    double per = 0;
    for (const auto& eq : equators(lab)) {
      for (auto [u, v] : eq.edges()) per += dist(s.vertices[u], s.vertices[v]);
    }
    // x - pi kills every symmetric pair: the four-term sum telescopes to 0
    auto f = [](double x) { return x - kPi; };
    for (const auto& eq : equators(lab)) {
      CHECK(std::abs(equator_dehn_sum(s, eq, f)) < 1e-9 * per);
      CHECK(equator_dehn_sum(s, eq, [](double) { return 0.0; }) == 0.0);
      // explicit angle values match the principal-value overload
      CHECK(equator_dehn_sum(s, eq, f, dihedral_values(s)) ==
            doctest::Approx(equator_dehn_sum(s, eq, f)).epsilon(1e-14));
    }
    auto throwing = [](double) -> double {
      fail("functional_undefined", "angle outside certified span");
    };
    CHECK_THROWS_WITH_AS(equator_dehn_sum(s, equators(lab)[0], throwing),
                         doctest::Contains("span"), Error);
  }
}
