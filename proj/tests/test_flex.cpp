#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "bellows/error.hpp"
#include "bellows/flex.hpp"
#include "bellows/intersect.hpp"
#include "bellows/invariants.hpp"
#include "bellows/octahedron.hpp"
#include "bellows/surface.hpp"

using namespace bellows;

namespace {

const double kPi = std::acos(-1.0);

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

Type3FlatParams type3_fixture() {
  Type3FlatParams p;
  p.rho_c = 1.0;
  p.rho_b = 0.5;
  p.normal_angles = {0.0, 2.0, 3.9, 2 * kPi - 1.9};
  return p;
}

PolyhedralSurface type1_at(double frac) {
  auto r = type1_flex_range(kT1);
  Type1Params q = kT1;
  q.t = arc_point(r.first, r.second, frac);
  return bricard_type1(q);
}

PolyhedralSurface type2_at(double frac) {
  auto r = type2_flex_range(kT2);
  Type2Params q = kT2;
  q.t = arc_point(r.first, r.second, frac);
  return bricard_type2(q);
}

PolyhedralSurface corner_tetra() {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<std::array<int, 3>> f = {
      {1, 2, 3}, {0, 2, 1}, {0, 3, 2}, {0, 1, 3}};
  return build_surface(v, f, {});
}

PolyhedralSurface doubly_covered_square() {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  std::vector<std::array<int, 3>> f = {
      {0, 1, 2}, {0, 2, 3}, {1, 0, 3}, {1, 3, 2}};
  return build_surface(v, f, {});
}

double max_vertex_dist(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, dist(a[i], b[i]));
  return m;
}

double zmax_of(const std::vector<Vec3>& vs) {
  double m = 0;
  for (const auto& v : vs) m = std::max(m, std::abs(v.z));
  return m;
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("gauge frames freeze six well-conditioned coordinates") {
  auto s = type1_at(0.1);
  auto lab = OctahedronLabels::standard();

  auto g = make_gauge(s, lab.a1, lab.b1, lab.c1);
  auto ix = g.coords();
  for (size_t i = 0; i < 6; ++i)
    for (size_t j = i + 1; j < 6; ++j) CHECK(ix[i] != ix[j]);
  for (size_t i = 0; i < 6; ++i) {
    double c = s.vertices[ix[i] / 3][ix[i] % 3];
    CHECK(c == g.values[i]);
  }
  CHECK(ix[0] == 3 * lab.a1);
  CHECK(ix[1] == 3 * lab.a1 + 1);
  CHECK(ix[2] == 3 * lab.a1 + 2);

  auto go = octahedron_gauge(s);
  CHECK(go.pinned == lab.a1);
  CHECK(go.axis == lab.b1);
  CHECK(go.plane == lab.c1);

  CHECK_THROWS_WITH_AS(make_gauge(s, 0, 0, 1), doctest::Contains("distinct"),
                       Error);
  CHECK_THROWS_WITH_AS(make_gauge(s, 0, 1, 99), doctest::Contains("range"),
                       Error);

  // a plane vertex sitting on the pin axis leaves a rotation free
  auto bad = s;
  bad.vertices[2] = bad.vertices[0] + (bad.vertices[1] - bad.vertices[0]) * 0.5;
  CHECK_THROWS_WITH_AS(make_gauge(bad, 0, 1, 2), doctest::Contains("axis"),
                       Error);
}

TEST_CASE("length residuals vanish on the variety and track displacements") {
  auto s = type1_at(0.3);
  auto ref = squared_lengths(s);
  REQUIRE(ref.size() == s.edges.size());
  for (size_t e = 0; e < ref.size(); ++e) {
    const auto& ed = s.edges[e];
    CHECK(ref[e] == norm2(s.vertices[ed[0]] - s.vertices[ed[1]]));
  }

  auto r0 = constraint_residual(s, ref);
  for (double x : r0) CHECK(x == 0.0);

  // rigid motion preserves lengths
  auto moved = s;
  const double c = std::cos(0.83), sn = std::sin(0.83);
  for (auto& v : moved.vertices) {
    Vec3 w{c * v.x - sn * v.y + 2.0, sn * v.x + c * v.y - 7.0, v.z + 0.4};
    v = w;
  }
  CHECK(max_abs(constraint_residual(moved, ref)) < 1e-10);

  // one displaced vertex changes exactly its incident rows
  auto bumped = s;
  Vec3 delta{0.02, -0.01, 0.03};
  bumped.vertices[4] += delta;
  auto r1 = constraint_residual(bumped, ref);
  for (size_t e = 0; e < ref.size(); ++e) {
    const auto& ed = s.edges[e];
    if (ed[0] != 4 && ed[1] != 4) {
      CHECK(r1[e] == 0.0);
      continue;
    }
    Vec3 d = s.vertices[ed[0]] - s.vertices[ed[1]];
    double sign = ed[0] == 4 ? 1.0 : -1.0;
    double expect = 2.0 * sign * dot(d, delta) + norm2(delta);
    CHECK(r1[e] == doctest::Approx(expect).epsilon(1e-12));
  }

  CHECK_THROWS_WITH_AS(constraint_residual(s, std::vector<double>(5, 1.0)),
                       doctest::Contains("edge count"), Error);
}

TEST_CASE("constraint spectra separate flexible from rigid frameworks") {
  auto s = type1_at(0.25);
  auto g = octahedron_gauge(s);
  auto sv = constraint_spectrum(s, g);
  REQUIRE(sv.size() == 12);
  for (size_t i = 1; i < sv.size(); ++i) CHECK(sv[i] >= sv[i - 1]);
  CHECK(sv[0] < 1e-7 * sv.back());   // the flex direction
  CHECK(sv[1] > 1e3 * std::max(sv[0], 1e-12 * sv.back()));

  auto tetra = corner_tetra();
  auto gt = make_gauge(tetra, 0, 1, 2);
  auto st = constraint_spectrum(tetra, gt);
  REQUIRE(st.size() == 6);
  CHECK(st[0] > 1e-3 * st.back());   // rigid: no soft direction
}

TEST_CASE("a corrector step holds lengths, driving value and gauge") {
  auto s = type1_at(0.1);
  auto lab = OctahedronLabels::standard();
  auto g = octahedron_gauge(s);
  auto ref = squared_lengths(s);
  auto d = DrivingCoord::at_edge(s.edge_index(lab.b1, lab.c1));
  const double psi0 = driving_value(s, d);
  CHECK(psi0 == doctest::Approx(1.959242015).epsilon(1e-9));

  // a target equal to the current value is a no-op
  auto same = flex_step(s, ref, g, d, psi0);
  for (size_t v = 0; v < s.vertices.size(); ++v) {
    CHECK(same.vertices[v].x == s.vertices[v].x);
    CHECK(same.vertices[v].y == s.vertices[v].y);
    CHECK(same.vertices[v].z == s.vertices[v].z);
  }

  auto next = flex_step(s, ref, g, d, psi0 - 0.01);
  CHECK(std::abs(driving_value(next, d) - (psi0 - 0.01)) < 1e-12);
  for (double x : constraint_residual(next, ref)) CHECK(std::abs(x) < 1e-12);
  auto ix = g.coords();
  for (size_t i = 0; i < 6; ++i)
    CHECK(next.vertices[ix[i] / 3][ix[i] % 3] == g.values[i]);

  CHECK_THROWS_WITH_AS(flex_step(s, std::vector<double>(3, 1.0), g, d, psi0),
                       doctest::Contains("edge count"), Error);

  // a rigid framework cannot reach any other driving value
  auto tetra = corner_tetra();
  auto gt = make_gauge(tetra, 0, 1, 2);
  auto dt = DrivingCoord::at_edge(0);
  double a0 = driving_value(tetra, dt);
  try {
    flex_step(tetra, squared_lengths(tetra), gt, dt, a0 + 0.1);
    FAIL("expected no_convergence");
  } catch (const Error& e) {
    CHECK(e.code() == "no_convergence");
  }
}

TEST_CASE("stepping far past the reachable angle interval fails cleanly") {
  auto se = type1_at(0.995);
  auto lab = OctahedronLabels::standard();
  auto d = DrivingCoord::at_edge(se.edge_index(lab.b1, lab.c1));
  double psie = driving_value(se, d);
  try {
    flex_step(se, squared_lengths(se), octahedron_gauge(se), d, psie - 3.0);
    FAIL("expected no_convergence");
  } catch (const Error& e) {
    CHECK(e.code() == "no_convergence");
  }
}

TEST_CASE("a traced flex reproduces the closed-form family") {
  auto lab = OctahedronLabels::standard();
  auto s0 = type1_at(0.1);
  auto g = octahedron_gauge(s0);
  auto d = DrivingCoord::at_edge(s0.edge_index(lab.b1, lab.c1));
  const double psi0 = driving_value(s0, d);
  const double psi1 = 0.541247991;  // angle at the 0.9 mark of the arc
  CHECK(dihedral_value(type1_at(0.9), d.index) ==
        doctest::Approx(psi1).epsilon(1e-8));

  auto path = trace_flex(s0, g, d, psi0, psi1, 41);
  REQUIRE(path.samples.size() == 41);
  CHECK(path.t.front() == psi0);
  CHECK(path.t.back() == psi1);
  for (size_t k = 1; k < path.t.size(); ++k) CHECK(path.t[k] < path.t[k - 1]);
  CHECK(max_vertex_dist(path.samples[0], s0.vertices) == 0.0);

  auto ref = squared_lengths(s0);
  const double vol0 = oriented_volume(s0);
  auto ix = g.coords();
  for (size_t k = 0; k < path.samples.size(); ++k) {
    auto s = path.at(k);
    CHECK(path.residual[k] < 1e-12);

    // the sample is congruent to the construction at its own linkage angle
    std::array<Vec3, 5> quad{s.vertices[lab.a1], s.vertices[lab.b1],
                             s.vertices[lab.a2], s.vertices[lab.b2],
                             Vec3{0, 0, 0}};
    Type1Params qq = kT1;
    qq.t = detail::equator_input_angle(quad);
    auto oracle = bricard_type1(qq);
    auto da = dihedral_values(s);
    auto db = dihedral_values(oracle);
    for (size_t e = 0; e < da.size(); ++e)
      CHECK(std::abs(da[e] - db[e]) < 1e-12);

    CHECK(std::abs(oriented_volume(s) - vol0) < 1e-12);

    for (size_t i = 0; i < 6; ++i)
      CHECK(path.samples[k][ix[i] / 3][ix[i] % 3] == g.values[i]);

    auto sv = constraint_spectrum(s, g);
    CHECK(sv[1] > 1e3 * std::max(sv[0], 1e-12 * sv.back()));
  }

  // length drift along a long trace stays tiny
  auto longpath = trace_flex(s0, g, d, psi0, psi1, 200);
  for (size_t k = 0; k < longpath.samples.size(); ++k) {
    auto cur = squared_lengths(longpath.at(k));
    for (size_t e = 0; e < cur.size(); ++e)
      CHECK(std::abs(std::sqrt(cur[e] / ref[e]) - 1.0) < 1e-10);
  }

  // retracing backwards returns to the start
  auto back = trace_flex(path.at(40), g, d, psi1, psi0, 41);
  CHECK(max_vertex_dist(back.samples.back(), s0.vertices) < 1e-8);
}

TEST_CASE("a traced plane-symmetric flex reproduces the closed-form family") {
  auto lab = OctahedronLabels::standard();
  auto s0 = type2_at(0.1);
  auto g = octahedron_gauge(s0);
  auto d = DrivingCoord::at_edge(s0.edge_index(lab.b1, lab.c1));
  const double psi0 = driving_value(s0, d);
  CHECK(psi0 == doctest::Approx(3.629567467).epsilon(1e-9));
  const double psi1 = 0.384058248;  // angle at the 0.9 mark, unwrapped

  auto path = trace_flex(s0, g, d, psi0, psi1, 21);
  for (size_t k = 0; k < path.samples.size(); ++k) {
    auto s = path.at(k);
    std::array<Vec3, 5> quad{s.vertices[lab.a1], s.vertices[lab.b1],
                             s.vertices[lab.a2], s.vertices[lab.b2],
                             Vec3{0, 0, 0}};
    Type2Params qq = kT2;
    qq.t = detail::equator_input_angle(quad);
    auto oracle = bricard_type2(qq);
    auto da = dihedral_values(s);
    auto db = dihedral_values(oracle);
    for (size_t e = 0; e < da.size(); ++e)
      CHECK(std::abs(da[e] - db[e]) < 1e-12);
  }
}

TEST_CASE("degenerate trace ranges give the single-sample path") {
  auto lab = OctahedronLabels::standard();
  auto s0 = type1_at(0.5);
  auto g = octahedron_gauge(s0);
  auto d = DrivingCoord::at_edge(s0.edge_index(lab.b1, lab.c1));
  double psi0 = driving_value(s0, d);

  auto p1 = trace_flex(s0, g, d, psi0, psi0, 50);
  CHECK(p1.samples.size() == 1);
  CHECK(max_vertex_dist(p1.samples[0], s0.vertices) == 0.0);

  auto p2 = trace_flex(s0, g, d, psi0, psi0 - 0.4, 1);
  CHECK(p2.samples.size() == 1);

  CHECK_THROWS_WITH_AS(trace_flex(s0, g, d, psi0 - 0.2, psi0, 10),
                       doctest::Contains("range start"), Error);
  CHECK_THROWS_WITH_AS(trace_flex(s0, g, d, psi0, psi0 - 0.4, 0),
                       doctest::Contains("sample"), Error);
  CHECK_THROWS_AS(p1.at(3), Error);
}

TEST_CASE("driving coordinates read dihedrals or heights") {
  auto s = type1_at(0.4);
  CHECK(driving_value(s, DrivingCoord::at_edge(7)) == dihedral_value(s, 7));
  CHECK(driving_value(s, DrivingCoord::at_vertex_z(3)) == s.vertices[3].z);
  CHECK_THROWS_AS(driving_value(s, DrivingCoord::at_vertex_z(17)), Error);

  // a height frozen by the gauge cannot drive
  auto lab = OctahedronLabels::standard();
  auto g = octahedron_gauge(s);
  CHECK_THROWS_WITH_AS(
      flex_step(s, squared_lengths(s), g, DrivingCoord::at_vertex_z(lab.a1),
                s.vertices[lab.a1].z + 0.1),
      doctest::Contains("frozen"), Error);
}

TEST_CASE("the flat position kicks off along a vertical direction") {
  auto lab = OctahedronLabels::standard();
  auto flat = bricard_type3_flat(type3_fixture()).surface;
  auto g = octahedron_gauge(flat);

  auto w = flex_kickoff(flat, g);
  REQUIRE(w.size() == 6);
  double n2 = 0;
  for (const auto& v : w) {
    CHECK(v.x == 0.0);
    CHECK(v.y == 0.0);
    n2 += v.z * v.z;
  }
  CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[lab.a1].z == 0.0);
  CHECK(w[lab.b1].z == 0.0);
  CHECK(w[lab.c1].z == 0.0);
  CHECK(w[lab.a2].z == doctest::Approx(0.632760650).epsilon(1e-7));
  CHECK(w[lab.b2].z == doctest::Approx(0.580897490).epsilon(1e-7));
  CHECK(w[lab.c2].z == doctest::Approx(0.512027408).epsilon(1e-7));

  // mirroring the flat shape in a vertical plane keeps the direction
  auto mv = flat.vertices;
  for (auto& p : mv) p.x = -p.x;
  auto mf = flat.faces;
  for (auto& f : mf) std::swap(f[1], f[2]);
  auto mirrored = build_surface(mv, mf, flat.labels);
  auto w2 = flex_kickoff(mirrored, octahedron_gauge(mirrored));
  for (int v = 0; v < 6; ++v) CHECK(std::abs(w[v].z - w2[v].z) < 1e-9);

  // non-flat input is rejected
  auto bent = flex_launch(flat, g, DrivingCoord::at_vertex_z(lab.c2), 0.08);
  CHECK_THROWS_WITH_AS(flex_kickoff(bent, g), doctest::Contains("flat"), Error);

  // a doubly covered square is flat but carries no vertical flex
  auto dc = doubly_covered_square();
  try {
    flex_kickoff(dc, make_gauge(dc, 0, 1, 2));
    FAIL("expected a failure");
  } catch (const Error& e) {
    CHECK((e.code() == "no_convergence" ||
           e.code() == "kernel_dimension_unexpected"));
  }
}

TEST_CASE("launching leaves the flat position on the requested side") {
  auto lab = OctahedronLabels::standard();
  auto flat = bricard_type3_flat(type3_fixture()).surface;
  auto g = octahedron_gauge(flat);
  auto d = DrivingCoord::at_vertex_z(lab.c2);
  auto ref = squared_lengths(flat);

  for (double target : {0.08, -0.08}) {
    auto s = flex_launch(flat, g, d, target);
    CHECK(std::abs(s.vertices[lab.c2].z - target) < 1e-12);
    for (double x : constraint_residual(s, ref)) CHECK(std::abs(x) < 1e-12);

    // leaving flat makes the surface self-touching, never embedded
    CHECK_FALSE(is_embedded(s));
    double rmin = 1e300;
    for (const auto& e : s.edges)
      if (e[0] == lab.a1 || e[1] == lab.a1)
        rmin = std::min(rmin, dist(s.vertices[e[0]], s.vertices[e[1]]));
    CHECK(link_convexity(vertex_link(s, lab.a1, 0.4 * rmin)) ==
          LinkShape::self_intersecting);
  }

  auto s0 = flex_launch(flat, g, d, 0.0);
  CHECK(max_vertex_dist(s0.vertices, flat.vertices) == 0.0);

  CHECK_THROWS_WITH_AS(
      flex_launch(flat, g, DrivingCoord::at_edge(0), 0.1),
      doctest::Contains("vertex-height"), Error);
  CHECK_THROWS_WITH_AS(
      flex_launch(flat, g, DrivingCoord::at_vertex_z(lab.c1), 0.1),
      doctest::Contains("leave the plane"), Error);
}

TEST_CASE("the flat tangent flex closes up around the configuration circle") {
  auto lab = OctahedronLabels::standard();
  auto flat = bricard_type3_flat(type3_fixture()).surface;
  auto g = octahedron_gauge(flat);
  int eAB = flat.edge_index(lab.a1, lab.b1);

  auto s = flex_launch(flat, g, DrivingCoord::at_vertex_z(lab.c2), 0.08);
  double a0 = dihedral_value(s, eAB);
  CHECK(a0 == doctest::Approx(6.248390927).epsilon(1e-6));

  auto dd = DrivingCoord::at_edge(eAB);
  auto path = trace_flex(s, g, dd, a0, a0 - 2 * kPi, 201);
  REQUIRE(path.samples.size() == 201);
  for (double r : path.residual) CHECK(r < 1e-10);

  // one full turn of the hinge angle returns to the starting sample
  CHECK(max_vertex_dist(path.samples.back(), s.vertices) < 1e-8);

  // the loop passes two flat positions, one per arc
  int dips = 0;
  std::vector<double> dip_principals;
  for (size_t k = 1; k + 1 < path.samples.size(); ++k) {
    double z = zmax_of(path.samples[k]);
    if (z < 0.05 && z <= zmax_of(path.samples[k - 1]) &&
        z <= zmax_of(path.samples[k + 1])) {
      ++dips;
      dip_principals.push_back(wrap2pi(path.t[k]));
    }
  }
  CHECK(dips == 2);
  REQUIRE(dip_principals.size() == 2);
  // one flat position doubles the hinge back (angle 2pi), the other keeps
  // the two faces aligned (angle pi)
  CHECK(std::min(dip_principals[0], dip_principals[1]) ==
        doctest::Approx(kPi).epsilon(0.05));
  CHECK(std::max(dip_principals[0], dip_principals[1]) ==
        doctest::Approx(2 * kPi).epsilon(0.05));

  // the volume vanishes around the whole loop
  for (size_t k = 0; k < path.samples.size(); k += 10)
    CHECK(std::abs(oriented_volume(path.at(k))) < 1e-8);
}

TEST_CASE("flex paths survive the file round trip") {
  auto lab = OctahedronLabels::standard();
  auto s0 = type1_at(0.2);
  auto g = octahedron_gauge(s0);
  auto d = DrivingCoord::at_edge(s0.edge_index(lab.b1, lab.c1));
  double psi0 = driving_value(s0, d);
  auto path = trace_flex(s0, g, d, psi0, psi0 - 0.3, 5);

  std::ostringstream csv;
  write_flex_csv(path, csv);
  std::istringstream lines(csv.str());
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line ==
        "t,v0_x,v0_y,v0_z,v1_x,v1_y,v1_z,v2_x,v2_y,v2_z,v3_x,v3_y,v3_z,"
        "v4_x,v4_y,v4_z,v5_x,v5_y,v5_z,residual");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 5);

  const std::string fname = "flex_roundtrip_test.json";
  write_flex_json(path, fname);
  auto loaded = read_flex_json(fname);
  std::remove(fname.c_str());

  CHECK(loaded.t == path.t);
  CHECK(loaded.residual == path.residual);
  REQUIRE(loaded.samples.size() == path.samples.size());
  for (size_t k = 0; k < path.samples.size(); ++k)
    CHECK(max_vertex_dist(loaded.samples[k], path.samples[k]) == 0.0);
  CHECK(loaded.base.vertices.size() == s0.vertices.size());
  CHECK(loaded.base.faces == s0.faces);
  CHECK(loaded.gauge.pinned == g.pinned);
  CHECK(loaded.gauge.axis == g.axis);
  CHECK(loaded.gauge.plane == g.plane);
  CHECK(loaded.gauge.axis_frozen == g.axis_frozen);
  CHECK(loaded.gauge.plane_frozen == g.plane_frozen);
  for (size_t i = 0; i < 6; ++i) CHECK(loaded.gauge.values[i] == g.values[i]);
  CHECK(loaded.driving.kind == d.kind);
  CHECK(loaded.driving.index == d.index);

  // replaying the loaded path stays on the variety
  auto ref = squared_lengths(loaded.at(0));
  for (size_t k = 0; k < loaded.samples.size(); ++k)
    for (double x : constraint_residual(loaded.at(k), ref))
      CHECK(std::abs(x) < 1e-10);

  CHECK_THROWS_WITH_AS(write_flex_json(path, "/nonexistent/dir/x.json"),
                       doctest::Contains("cannot open"), Error);
  CHECK_THROWS_WITH_AS(read_flex_json("/nonexistent/dir/x.json"),
                       doctest::Contains("cannot open"), Error);
  {
    std::ofstream bad("flex_bad_test.json");
    bad << "{\"t\": [0]}";
  }
  CHECK_THROWS_WITH_AS(read_flex_json("flex_bad_test.json"),
                       doctest::Contains("missing"), Error);
  std::remove("flex_bad_test.json");
}
