#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "bellows/error.hpp"
#include "bellows/surface.hpp"
#include "bellows/vec3.hpp"

namespace bellows {

// Vertex roles of a Bricard octahedron. The three pairs (A1,A2), (B1,B2),
// (C1,C2) are the non-adjacent "pole" pairs; the faces are the eight
// triangles A_i B_j C_k.
struct OctahedronLabels {
  int a1 = 0, a2 = 1, b1 = 2, b2 = 3, c1 = 4, c2 = 5;

  static OctahedronLabels standard() { return {}; }
  std::array<int, 6> all() const { return {a1, a2, b1, b2, c1, c2}; }
};

// One of the three closed 4-cycles of octahedron edges. Opposite edges of
// the cycle (0,2) and (1,3) form the (l, l*) pairs.
struct Equator {
  std::array<int, 4> cycle{};  // vertex indices in cyclic order

  std::array<std::pair<int, int>, 4> edges() const {
    return {{{cycle[0], cycle[1]},
             {cycle[1], cycle[2]},
             {cycle[2], cycle[3]},
             {cycle[3], cycle[0]}}};
  }
};

// Line-symmetric octahedron. The equator A1B1A2B2 has equal opposite sides
// |A1B1| = |A2B2| and |A1B2| = |A2B1|; C2 is the image of C1 under the
// half-turn about the line through the midpoints of A1A2 and B1B2.
struct Type1Params {
  double len_a1b1 = 0;  // = |A2B2|
  double len_a1b2 = 0;  // = |A2B1|
  double len_a1c1 = 0;
  double len_b1c1 = 0;
  double len_a2c1 = 0;
  double len_b2c1 = 0;
  double t = 0;  // dihedral angle of the equatorial linkage at edge A1B1
};

// Plane-symmetric octahedron. B1 and B2 are equidistant from A1 and A2
// (|A1B1| = |B1A2|, |A1B2| = |B2A2|), so both lie on the plane P that
// exchanges A1 with A2; C2 is the mirror image of C1 in P.
struct Type2Params {
  double len_a1b1 = 0;  // = |B1A2|
  double len_a1b2 = 0;  // = |B2A2|
  double len_a1c1 = 0;
  double len_b1c1 = 0;
  double len_a2c1 = 0;
  double len_b2c1 = 0;
  double t = 0;  // dihedral angle of the equatorial linkage at edge A1B1
};

// Flat position of a type-3 octahedron, built from two concentric circles
// K_C (radius rho_c) and K_B (radius rho_b). The convex quadrilateral
// A1B1A2B2 has its sides on the four tangent lines of K_C given by
// normal_angles; C1 and C2 lie on the tangent lines from A1 and A2 to K_B.
//
// normal_angles[k] is the direction angle of the outward normal of side k
// in the order A1B1, B1A2, A2B2, B2A1; side k lies on the line
// { x : <x - center, n(angle_k)> = rho_c }. The construction rotates the
// whole configuration so that side A1B1 is horizontal (normal pointing in
// -y) and translates the common center to `center`.
//
// Only the gaps between consecutive normals matter. The gap at A1 and the
// gap at A2 must be equal: that places A1 and A2 at the same distance from
// the center, which is exactly the condition for the plane-angle identities
// at A1, A2 (and hence for the dihedral-angle relations along the flex) to
// hold. Valid data also needs rho_b < rho_c; otherwise the self-intersecting
// quadrilateral A1C1A2C2 cannot satisfy those identities.
struct Type3FlatParams {
  Vec3 center{0, 0, 0};
  double rho_c = 0;
  double rho_b = 0;
  std::array<double, 4> normal_angles{};
};

// Tangency data of a type-3 flat position. c[i][j] is the point where side
// A_{i+1}B_{j+1} touches K_C; b[i][j] is the point where the line through
// A_{i+1}C_{j+1} touches K_B. Signed lengths are measured along the side
// direction (from the A vertex towards the other endpoint); a negative
// "from" value or a value exceeding the side length marks a tangency point
// outside the closed segment.
struct TangencyData {
  Vec3 c[2][2]{};
  Vec3 b[2][2]{};
  double c_from_a[2][2]{};  // signed distance A_i -> c_ij along A_iB_j
  double c_from_b[2][2]{};  // signed distance B_j -> c_ij along B_jA_i
  double b_from_a[2][2]{};  // signed distance A_i -> b_ij along A_iC_j
  double b_from_c[2][2]{};  // signed distance C_j -> b_ij along C_jA_i
  double rho_a = 0;         // radius of the derived circle K_A
  double rho_a_spread = 0;  // max - min of the four center-to-line distances
  bool collinear_degenerate = false;  // some quadrilateral vertex is a tangency point
};

struct Type3FlatResult {
  PolyhedralSurface surface;
  TangencyData tangency;
};

// Errors:
//   invalid_params            malformed lengths / radii / degenerate symmetry
//   unreachable_configuration t outside the linkage's closure range
//   invalid_tangent_config    tangent angles do not produce the required
//                             convex / self-intersecting pattern
PolyhedralSurface bricard_type1(const Type1Params& p);
PolyhedralSurface bricard_type2(const Type2Params& p);
Type3FlatResult bricard_type3_flat(const Type3FlatParams& p);

// The three equators A1B1A2B2, A1C1A2C2, B1C1B2C2 in that order.
std::array<Equator, 3> equators(const OctahedronLabels& labels);

OctahedronLabels labels_from_surface(const PolyhedralSurface& s);

// Range of the public flex parameter t (dihedral at edge A1B1) reachable on
// the constructor's linkage branch, for diagnostics and for sampling flexes.
// The attained values form an arc of the angle circle, returned as its two
// endpoints in counterclockwise order; first > second means the arc crosses
// the 0 = 2pi seam.
std::pair<double, double> type1_flex_range(const Type1Params& p);
std::pair<double, double> type2_flex_range(const Type2Params& p);

namespace detail {

// Face list of the combinatorial octahedron, oriented so that every edge is
// traversed once in each direction.
inline std::vector<std::array<int, 3>> octahedron_faces(const OctahedronLabels& L) {
  return {{L.a1, L.b1, L.c1}, {L.a1, L.c2, L.b1}, {L.a1, L.c1, L.b2},
          {L.a1, L.b2, L.c2}, {L.a2, L.c1, L.b1}, {L.a2, L.b1, L.c2},
          {L.a2, L.b2, L.c1}, {L.a2, L.c2, L.b2}};
}

// Unit vector v with <v, ua> = cos(arc_a), <v, ub> = cos(arc_b), elbow
// selecting the side of the plane span(ua, ub). Throws
// unreachable_configuration when the two small circles do not meet.
template <class R>
Vec3T<R> unit_from_two_arcs(const Vec3T<R>& ua, const Vec3T<R>& ub, R arc_a,
                            R arc_b, int elbow) {
  using std::cos;
  using std::sqrt;
  const R ca = cos(arc_a), cb = cos(arc_b), g = dot(ua, ub);
  const R det = R(1) - g * g;
  require(det > R(1e-14), "invalid_params", "fan rays are collinear");
  const R alpha = (ca - cb * g) / det;
  const R beta = (cb - ca * g) / det;
  const R par2 = alpha * ca + beta * cb;  // |projection|^2
  const R disc = R(1) - par2;
  if (disc < R(0))
    fail("unreachable_configuration", "fan closure circles do not intersect");
  Vec3T<R> w = cross(ua, ub);
  const R wn = sqrt(dot(w, w));
  const R gamma = (elbow >= 0 ? R(1) : R(-1)) * sqrt(disc) / wn;
  return ua * alpha + ub * beta + w * gamma;
}

// Ray at angular distance arc from axis, rotated by dihedral about axis
// starting from the half-plane containing ref.
template <class R>
Vec3T<R> ray_about(const Vec3T<R>& axis, const Vec3T<R>& ref, R arc, R dihedral) {
  using std::cos;
  using std::sin;
  Vec3T<R> e1 = ref - axis * dot(ref, axis);
  e1 = e1 * (R(1) / norm(e1));
  const Vec3T<R> e2 = cross(axis, e1);
  return axis * cos(arc) + (e1 * cos(dihedral) + e2 * sin(dihedral)) * sin(arc);
}

// Interior angle of a triangle from its side lengths (opposite side last).
template <class R>
R angle_from_sides(R adj1, R adj2, R opposite) {
  using std::acos;
  R c = (adj1 * adj1 + adj2 * adj2 - opposite * opposite) / (R(2) * adj1 * adj2);
  if (c > R(1)) c = R(1);
  if (c < R(-1)) c = R(-1);
  return acos(c);
}

// Shared fan construction for types 1 and 2: places C1 at the origin and
// the equator vertices A1, B1, A2, B2 on rays from it, driven by the
// internal chart psi = dihedral angle at edge C1B1. Order of lens:
// |A1C1|, |B1C1|, |A2C1|, |B2C1|; order of eq: |A1B1|, |B1A2|, |A2B2|, |B2A1|.
// Returns {A1, B1, A2, B2, C1}.
template <class R>
std::array<Vec3T<R>, 5> equator_fan(const std::array<R, 4>& lens,
                                    const std::array<R, 4>& eq, R psi,
                                    int elbow) {
  const R th_ab1 = angle_from_sides(lens[0], lens[1], eq[0]);
  const R th_b1a2 = angle_from_sides(lens[1], lens[2], eq[1]);
  const R th_a2b2 = angle_from_sides(lens[2], lens[3], eq[2]);
  const R th_b2a1 = angle_from_sides(lens[3], lens[0], eq[3]);

  using std::cos;
  using std::sin;
  const Vec3T<R> ra1{R(1), R(0), R(0)};
  const Vec3T<R> rb1{cos(th_ab1), sin(th_ab1), R(0)};
  const Vec3T<R> ra2 = ray_about(rb1, ra1, th_b1a2, psi);
  const Vec3T<R> rb2 = unit_from_two_arcs(ra2, ra1, th_a2b2, th_b2a1, elbow);

  return {ra1 * lens[0], rb1 * lens[1], ra2 * lens[2], rb2 * lens[3],
          Vec3T<R>{R(0), R(0), R(0)}};
}

// Half-turn of p about the line through q0 with direction d (unit).
template <class R>
Vec3T<R> half_turn(const Vec3T<R>& p, const Vec3T<R>& q0, const Vec3T<R>& d) {
  const Vec3T<R> w = p - q0;
  return q0 + d * (R(2) * dot(w, d)) - w;
}

// Reflection of p in the plane through q0 with unit normal n.
template <class R>
Vec3T<R> mirror(const Vec3T<R>& p, const Vec3T<R>& q0, const Vec3T<R>& n) {
  return p - n * (R(2) * dot(p - q0, n));
}

// Dihedral angle at the equator edge A1B1, between the half-plane towards
// A2 and the half-plane towards B2, measured in (0, 2pi) with the right-hand
// orientation along A1 -> B1. Vertices: {A1, B1, A2, B2}.
template <class R>
R equator_input_angle(const std::array<Vec3T<R>, 5>& v) {
  using std::atan2;
  const Vec3T<R> e = v[1] - v[0];
  const R en = norm(e);
  const Vec3T<R> d = e * (R(1) / en);
  Vec3T<R> wa = v[2] - v[0];  // towards A2
  Vec3T<R> wb = v[3] - v[0];  // towards B2
  wa = wa - d * dot(wa, d);
  wb = wb - d * dot(wb, d);
  const R cosv = dot(wa, wb);
  const R sinv = dot(cross(wa, wb), d);
  R ang = atan2(sinv, cosv);
  const R pi = acos(R(-1));
  if (ang <= R(0)) ang += R(2) * pi;
  return ang;
}

// Type-1 completion: C2 is the half-turn image of C1 about the line through
// the midpoints of A1A2 and B1B2. Works in any scalar type; psi is the
// internal chart. Returns the six vertices in label order A1,A2,B1,B2,C1,C2.
template <class R>
std::array<Vec3T<R>, 6> type1_vertices(const std::array<R, 4>& lens,
                                       const std::array<R, 2>& eq, R psi,
                                       int elbow) {
  const std::array<R, 4> sides{eq[0], eq[1], eq[0], eq[1]};
  const auto f = equator_fan(lens, sides, psi, elbow);
  const Vec3T<R> ma = (f[0] + f[2]) * R(0.5);
  const Vec3T<R> mb = (f[1] + f[3]) * R(0.5);
  Vec3T<R> d = mb - ma;
  const R dn = norm(d);
  require(dn > R(1e-12), "invalid_params",
          "symmetry line of the equator is undefined");
  d = d * (R(1) / dn);
  const Vec3T<R> c2 = half_turn(f[4], ma, d);
  return {f[0], f[2], f[1], f[3], f[4], c2};
}

// Type-2 completion: C2 is the mirror image of C1 in the plane that
// exchanges A1 and A2 (the perpendicular bisector plane of A1A2, which
// contains B1 and B2 and bisects the dihedral angle between the half-planes
// A1B1B2 and A2B1B2).
template <class R>
std::array<Vec3T<R>, 6> type2_vertices(const std::array<R, 4>& lens,
                                       const std::array<R, 2>& eq, R psi,
                                       int elbow) {
  const std::array<R, 4> sides{eq[0], eq[0], eq[1], eq[1]};
  const auto f = equator_fan(lens, sides, psi, elbow);
  const Vec3T<R> m = (f[0] + f[2]) * R(0.5);
  Vec3T<R> n = f[2] - f[0];
  const R nn = norm(n);
  require(nn > R(1e-12), "invalid_params", "A1 and A2 coincide");
  n = n * (R(1) / nn);
  const Vec3T<R> c2 = mirror(f[4], m, n);
  return {f[0], f[2], f[1], f[3], f[4], c2};
}

// Flat type-3 core over any scalar type. Angles are the outward normal
// directions of the four K_C tangent lines carrying A1B1, B1A2, A2B2, B2A1.
// Returns the six vertices (z = 0) in label order A1,A2,B1,B2,C1,C2 for the
// requested tangent pairing (0 pairs same-sign tangents of A1 and A2).
template <class R>
std::array<Vec3T<R>, 6> type3_flat_vertices(R rho_c, R rho_b,
                                            const std::array<R, 4>& normals,
                                            int pairing) {
  using std::acos;
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const R pi = acos(R(-1));
  // Intersection of the tangent lines of a radius-rho circle with normal
  // angles na, nb: at distance rho / cos(g/2) along the bisector, where g is
  // the turn from na to nb. Stable down to g = 0 (point of tangency).
  auto meet = [&](R rho, R na, R nb) {
    R g = nb - na;
    while (g < R(0)) g += R(2) * pi;
    while (g >= R(2) * pi) g -= R(2) * pi;
    const R c = cos(g / R(2));
    require((c > R(0) ? c : -c) > R(1e-9), "invalid_tangent_config",
            "tangent lines are parallel");
    const R m = na + g / R(2);
    return Vec3T<R>{rho * cos(m) / c, rho * sin(m) / c, R(0)};
  };
  auto corner = [&](R na, R nb) { return meet(rho_c, na, nb); };
  const Vec3T<R> a1 = corner(normals[3], normals[0]);
  const Vec3T<R> b1 = corner(normals[0], normals[1]);
  const Vec3T<R> a2 = corner(normals[1], normals[2]);
  const Vec3T<R> b2 = corner(normals[2], normals[3]);

  std::array<std::array<R, 2>, 2> tang{};  // tangent normal angles from A1, A2
  const Vec3T<R> av[2] = {a1, a2};
  for (int i = 0; i < 2; ++i) {
    const R d = sqrt(av[i].x * av[i].x + av[i].y * av[i].y);
    require(d > rho_b * (R(1) + R(1e-12)), "invalid_tangent_config",
            "vertex lies on or inside the inner circle");
    const R th = atan2(av[i].y, av[i].x);
    const R dl = acos(rho_b / d);
    tang[i] = {th + dl, th - dl};
  }
  auto tline_corner = [&](R na, R nb) { return meet(rho_b, na, nb); };
  Vec3T<R> c1, c2;
  if (pairing == 0) {
    c1 = tline_corner(tang[0][0], tang[1][0]);
    c2 = tline_corner(tang[0][1], tang[1][1]);
  } else {
    c1 = tline_corner(tang[0][0], tang[1][1]);
    c2 = tline_corner(tang[0][1], tang[1][0]);
  }
  return {a1, a2, b1, b2, c1, c2};
}

}  // namespace detail

}  // namespace bellows
