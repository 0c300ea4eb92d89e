#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <string>

#include "bellows/error.hpp"
#include "bellows/surface.hpp"

using namespace bellows;

namespace {

PolyhedralSurface regular_octahedron() {
  std::vector<Vec3> v{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                      {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<std::array<int, 3>> f{{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                                    {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return build_surface(v, f, {{"A1", 0}, {"A2", 1}});
}

std::string tmp_path(const char* name) {
  return std::string("/tmp/bellows_test_") + name;
}

}  // namespace

TEST_CASE("octahedron edge tables") {
  auto s = regular_octahedron();
  CHECK(s.vertex_count() == 6);
  CHECK(s.face_count() == 8);
  CHECK(s.edge_count() == 12);
  for (auto& e : s.edges) CHECK(e[0] < e[1]);
  for (int e = 0; e < s.edge_count(); ++e) {
    CHECK(s.edge_faces[e][0] >= 0);
    CHECK(s.edge_faces[e][1] >= 0);
    CHECK(s.edge_faces[e][0] != s.edge_faces[e][1]);
  }
  CHECK(s.edge_index(0, 2) >= 0);
  CHECK(s.edge_index(2, 0) == s.edge_index(0, 2));
  CHECK(s.edge_index(0, 1) == -1);  // poles are not adjacent
  CHECK(s.edge_length(s.edge_index(0, 2)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.diameter() == doctest::Approx(2 * std::sqrt(3.0)));
  CHECK(s.labeled("A2") == 1);
  CHECK(s.labeled_pos("A1").x == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(s.labeled("Q9"), doctest::Contains("unknown_label"), Error);
}

TEST_CASE("build rejects broken complexes") {
  auto v = regular_octahedron().vertices;
  std::vector<std::array<int, 3>> f{{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                                    {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};

  SUBCASE("missing face leaves boundary edges") {
    auto bad = f;
    bad.pop_back();
    CHECK_THROWS_WITH_AS(build_surface(v, bad), doctest::Contains("non_manifold_edge"),
                         Error);
  }
  SUBCASE("flipped face breaks orientation") {
    auto bad = f;
    std::swap(bad[0][1], bad[0][2]);
    CHECK_THROWS_WITH_AS(build_surface(v, bad),
                         doctest::Contains("orientation_mismatch"), Error);
  }
  SUBCASE("face with a repeated vertex") {
    auto bad = f;
    bad[0] = {0, 0, 4};
    CHECK_THROWS_WITH_AS(build_surface(v, bad), doctest::Contains("degenerate_face"),
                         Error);
  }
  SUBCASE("out of range index") {
    auto bad = f;
    bad[0] = {0, 2, 9};
    CHECK_THROWS_WITH_AS(build_surface(v, bad), doctest::Contains("bad_index"), Error);
  }
  SUBCASE("unreferenced vertex") {
    auto vv = v;
    vv.push_back({5, 5, 5});
    CHECK_THROWS_WITH_AS(build_surface(vv, f),
                         doctest::Contains("unreferenced_vertex"), Error);
  }
  SUBCASE("zero area face") {
    auto vv = v;
    vv[4] = vv[0] * 0.5 + vv[2] * 0.5;  // on the edge 0-2
    CHECK_THROWS_WITH_AS(build_surface(vv, f), doctest::Contains("degenerate_face"),
                         Error);
  }
}

TEST_CASE("obj round trip") {
  auto s = regular_octahedron();
  auto path = tmp_path("roundtrip.obj");
  write_obj(s, path);
  auto r = read_obj(path);
  std::remove(path.c_str());
  REQUIRE(r.vertex_count() == s.vertex_count());
  REQUIRE(r.face_count() == s.face_count());
  for (int i = 0; i < s.vertex_count(); ++i)
    CHECK(dist(r.vertices[i], s.vertices[i]) < 1e-12);
  for (int i = 0; i < s.face_count(); ++i) CHECK(r.faces[i] == s.faces[i]);
}

TEST_CASE("json round trip keeps labels") {
  auto s = regular_octahedron();
  auto r = surface_from_json(surface_to_json(s));
  REQUIRE(r.vertex_count() == s.vertex_count());
  CHECK(r.labels == s.labels);
  for (int i = 0; i < s.vertex_count(); ++i)
    CHECK(dist(r.vertices[i], s.vertices[i]) < 1e-15);
  CHECK(r.edge_count() == 12);

  auto path = tmp_path("roundtrip.json");
  write_surface_json(s, path);
  auto rf = read_surface_json(path);
  std::remove(path.c_str());
  CHECK(rf.labels == s.labels);
}

TEST_CASE("json parse errors carry codes") {
  CHECK_THROWS_WITH_AS(surface_from_json("not json"), doctest::Contains("parse_error"),
                       Error);
  CHECK_THROWS_WITH_AS(surface_from_json("{\"vertices\": []}"),
                       doctest::Contains("parse_error"), Error);
}
