#include "bellows/octahedron.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace bellows {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::map<std::string, int> standard_label_map() {
  return {{"A1", 0}, {"A2", 1}, {"B1", 2}, {"B2", 3}, {"C1", 4}, {"C2", 5}};
}

PolyhedralSurface assemble(const std::array<Vec3, 6>& v) {
  std::vector<Vec3> verts(v.begin(), v.end());
  return build_surface(verts, detail::octahedron_faces(OctahedronLabels::standard()),
                       standard_label_map());
}

void check_c1_faces(const std::array<double, 4>& lens, const std::array<double, 4>& sides) {
  const char* face[4] = {"A1B1C1", "A2B1C1", "A2B2C1", "A1B2C1"};
  for (int k = 0; k < 4; ++k) {
    const double u = lens[k], v = lens[(k + 1) % 4], w = sides[k];
    require(u > 0 && v > 0 && w > 0, "invalid_params", "edge lengths must be positive");
    require(u + v > w && v + w > u && w + u > v, "invalid_params",
            std::string("triangle inequality fails for face ") + face[k]);
  }
}

struct Chart {
  std::array<double, 4> lens;   // |A1C1|, |B1C1|, |A2C1|, |B2C1|
  std::array<double, 4> sides;  // |A1B1|, |B1A2|, |A2B2|, |B2A1|
};

bool fan_at(const Chart& ch, double psi, int elbow, std::array<Vec3, 5>& out) {
  try {
    out = detail::equator_fan(ch.lens, ch.sides, psi, elbow);
    return true;
  } catch (const Error& e) {
    if (std::string(e.code()) == "unreachable_configuration") return false;
    throw;
  }
}

// Inverts t(psi) on one elbow branch by bracketed bisection over a dense
// scan of the chart. The wrapped difference keeps the bracket test correct
// across the 0/2pi seam of t.
bool invert_chart(const Chart& ch, double t_target, int elbow, double* psi_out) {
  const int n = 1440;
  auto tval = [&](double psi, bool* ok) {
    std::array<Vec3, 5> f;
    *ok = fan_at(ch, psi, elbow, f);
    return *ok ? detail::equator_input_angle(f) : 0.0;
  };
  auto wdiff = [&](double t) {
    return std::atan2(std::sin(t - t_target), std::cos(t - t_target));
  };
  double prev_psi = 0, prev_d = 0;
  bool have_prev = false;
  for (int i = 0; i <= n; ++i) {
    const double psi = 2 * kPi * i / n;
    bool ok = false;
    const double t = tval(psi, &ok);
    if (!ok) {
      have_prev = false;
      continue;
    }
    const double d = wdiff(t);
    if (std::abs(d) < 1e-15) {
      *psi_out = psi;
      return true;
    }
    if (have_prev && prev_d * d < 0 && std::abs(d - prev_d) < kPi) {
      double lo = prev_psi, hi = psi, dlo = prev_d;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        bool mok = false;
        const double dm = wdiff(tval(mid, &mok));
        if (!mok) break;
        if (dlo * dm <= 0)
          hi = mid;
        else {
          lo = mid;
          dlo = dm;
        }
      }
      *psi_out = 0.5 * (lo + hi);
      return true;
    }
    prev_psi = psi;
    prev_d = d;
    have_prev = true;
  }
  return false;
}

// The attained t values form an arc of the angle circle (crossing 0 is
// common). Returns the arc endpoints counterclockwise: first > second means
// the arc passes through 0.
std::pair<double, double> flex_range(const Chart& ch) {
  const int n = 2880;
  std::vector<double> ts;
  ts.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::array<Vec3, 5> f;
    if (!fan_at(ch, 2 * kPi * i / n, +1, f)) continue;
    ts.push_back(detail::equator_input_angle(f));
  }
  require(!ts.empty(), "invalid_params", "linkage has no admissible configuration");
  std::sort(ts.begin(), ts.end());
  double best_gap = 2 * kPi - ts.back() + ts.front();
  size_t after = 0;  // index of the value that follows the widest gap
  for (size_t i = 1; i < ts.size(); ++i)
    if (ts[i] - ts[i - 1] > best_gap) {
      best_gap = ts[i] - ts[i - 1];
      after = i;
    }
  const double lo = ts[after];
  const double hi = after == 0 ? ts.back() : ts[after - 1];
  return {lo, hi};
}

double resolve_psi(const Chart& ch, double t, int* elbow_out) {
  double psi = 0;
  for (int elbow : {+1, -1}) {
    if (invert_chart(ch, t, elbow, &psi)) {
      *elbow_out = elbow;
      return psi;
    }
  }
  fail("unreachable_configuration",
       "flex parameter outside the linkage's closure range");
}

double plane_angle(const Vec3& v, const Vec3& p, const Vec3& q) {
  return angle_between(p - v, q - v);
}

bool segments_cross_2d(const Vec3& p1, const Vec3& p2, const Vec3& q1, const Vec3& q2) {
  auto orient = [](const Vec3& a, const Vec3& b, const Vec3& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  };
  return orient(p1, p2, q1) * orient(p1, p2, q2) < 0 &&
         orient(q1, q2, p1) * orient(q1, q2, p2) < 0;
}

struct BatteryReport {
  double iso = 0, pi_sum = 0, cross = 0, ka_spread = 0;
  bool ac_crossed = false;
};

BatteryReport flat_battery(const std::array<Vec3, 6>& v) {
  const Vec3 &a1 = v[0], &a2 = v[1], &b1 = v[2], &b2 = v[3], &c1 = v[4], &c2 = v[5];
  BatteryReport r;
  auto iso4 = [&](const Vec3& at, const Vec3& n1, const Vec3& n2, const Vec3& n3,
                  const Vec3& n4) {
    const double s1 = plane_angle(at, n1, n2), s2 = plane_angle(at, n2, n3);
    const double s3 = plane_angle(at, n3, n4), s4 = plane_angle(at, n4, n1);
    return std::max(std::abs(s1 - s3), std::abs(s2 - s4));
  };
  r.iso = std::max({iso4(a1, b1, c1, b2, c2), iso4(a2, b1, c1, b2, c2),
                    iso4(b1, a1, c1, a2, c2), iso4(b2, a1, c1, a2, c2)});
  auto pis = [&](const Vec3& at) {
    return std::max(
        std::abs(plane_angle(at, a1, b1) + plane_angle(at, a2, b2) - kPi),
        std::abs(plane_angle(at, b1, a2) + plane_angle(at, b2, a1) - kPi));
  };
  r.pi_sum = std::max(pis(c1), pis(c2));
  r.cross = std::max(std::abs(plane_angle(a1, b2, c2) - plane_angle(a2, b1, c2)),
                     std::abs(plane_angle(a1, b2, c1) - plane_angle(a2, b1, c1)));
  std::array<std::pair<Vec3, Vec3>, 4> bc{{{b1, c1}, {c1, b2}, {b2, c2}, {c2, b1}}};
  double dmin = 1e300, dmax = -1e300;
  for (const auto& [p, q] : bc) {
    const Vec3 d = q - p;
    const double len = std::hypot(d.x, d.y);
    const double dist = std::abs(-d.y * p.x + d.x * p.y) / len;
    dmin = std::min(dmin, dist);
    dmax = std::max(dmax, dist);
  }
  r.ka_spread = dmax - dmin;
  r.ac_crossed = segments_cross_2d(a1, c1, a2, c2) || segments_cross_2d(c1, a2, c2, a1);
  return r;
}

}  // namespace

PolyhedralSurface bricard_type1(const Type1Params& p) {
  const Chart ch{{p.len_a1c1, p.len_b1c1, p.len_a2c1, p.len_b2c1},
                 {p.len_a1b1, p.len_a1b2, p.len_a1b1, p.len_a1b2}};
  check_c1_faces(ch.lens, ch.sides);
  const bool on_axis = std::abs(p.len_a1c1 - p.len_a2c1) < 1e-9 * p.len_a1c1 &&
                       std::abs(p.len_b1c1 - p.len_b2c1) < 1e-9 * p.len_b1c1;
  require(!on_axis, "invalid_params",
          "C1 lies on the symmetry line, C2 would coincide with it");
  int elbow = +1;
  const double psi = resolve_psi(ch, p.t, &elbow);
  const auto v = detail::type1_vertices<double>(
      ch.lens, {p.len_a1b1, p.len_a1b2}, psi, elbow);
  return assemble(v);
}

PolyhedralSurface bricard_type2(const Type2Params& p) {
  const Chart ch{{p.len_a1c1, p.len_b1c1, p.len_a2c1, p.len_b2c1},
                 {p.len_a1b1, p.len_a1b1, p.len_a1b2, p.len_a1b2}};
  check_c1_faces(ch.lens, ch.sides);
  require(std::abs(p.len_a1c1 - p.len_a2c1) > 1e-9 * p.len_a1c1, "invalid_params",
          "C1 lies on the symmetry plane, C2 would coincide with it");
  int elbow = +1;
  const double psi = resolve_psi(ch, p.t, &elbow);
  const auto v = detail::type2_vertices<double>(
      ch.lens, {p.len_a1b1, p.len_a1b2}, psi, elbow);
  return assemble(v);
}

std::pair<double, double> type1_flex_range(const Type1Params& p) {
  const Chart ch{{p.len_a1c1, p.len_b1c1, p.len_a2c1, p.len_b2c1},
                 {p.len_a1b1, p.len_a1b2, p.len_a1b1, p.len_a1b2}};
  check_c1_faces(ch.lens, ch.sides);
  return flex_range(ch);
}

std::pair<double, double> type2_flex_range(const Type2Params& p) {
  const Chart ch{{p.len_a1c1, p.len_b1c1, p.len_a2c1, p.len_b2c1},
                 {p.len_a1b1, p.len_a1b1, p.len_a1b2, p.len_a1b2}};
  check_c1_faces(ch.lens, ch.sides);
  return flex_range(ch);
}

Type3FlatResult bricard_type3_flat(const Type3FlatParams& p) {
  require(p.rho_c > 0 && p.rho_b > 0, "invalid_params", "radii must be positive");
  require(std::abs(p.rho_c - p.rho_b) > 1e-12 * p.rho_c, "invalid_params",
          "the two circles must have different radii");
  require(p.center.z == 0, "invalid_params", "center must lie in the z = 0 plane");

  // Rotational gauge: side A1B1 horizontal, outward normal -y.
  const double shift = -kPi / 2 - p.normal_angles[0];
  std::array<double, 4> normals{};
  for (int k = 0; k < 4; ++k) normals[k] = p.normal_angles[k] + shift;
  std::array<double, 4> gaps{};
  double gap_sum = 0;
  for (int k = 0; k < 4; ++k) {
    double g = std::fmod(normals[(k + 1) % 4] - normals[k], 2 * kPi);
    if (k == 3) g = std::fmod(normals[0] + 2 * kPi - normals[3], 2 * kPi);
    if (g < 0) g += 2 * kPi;
    gaps[k] = g;
    gap_sum += g;
  }
  require(std::abs(gap_sum - 2 * kPi) < 1e-9, "invalid_tangent_config",
          "tangent line normals must wind once around the circle");
  for (double g : gaps)
    require(g < kPi - 1e-9, "invalid_tangent_config",
            "consecutive tangent lines diverge, quadrilateral is unbounded");
  // Rebuild normals from accumulated gaps so the core sees one clean turn.
  std::array<double, 4> acc{};
  acc[0] = -kPi / 2;
  for (int k = 1; k < 4; ++k) acc[k] = acc[k - 1] + gaps[k - 1];

  std::array<Vec3, 6> v{};
  BatteryReport rep;
  int pairing = -1;
  std::string why = "no tangent pairing yields the valid pattern";
  for (int cand = 0; cand < 2 && pairing < 0; ++cand) {
    std::array<Vec3, 6> vc;
    try {
      vc = detail::type3_flat_vertices<double>(p.rho_c, p.rho_b, acc, cand);
    } catch (const Error&) {
      continue;
    }
    const BatteryReport r = flat_battery(vc);
    const double tol = 1e-8 * std::max(1.0, p.rho_c);
    if (!r.ac_crossed) {
      why = "quadrilateral A1C1A2C2 is not self-intersecting";
      continue;
    }
    if (r.iso > tol || r.pi_sum > tol || r.cross > tol) {
      why = "plane-angle identities fail; gaps at A1 and A2 must be equal and "
            "rho_b must be smaller than rho_c";
      continue;
    }
    if (r.ka_spread > tol) {
      why = "no concentric circle inscribed in B1C1B2C2";
      continue;
    }
    v = vc;
    rep = r;
    pairing = cand;
  }
  if (pairing < 0) fail("invalid_tangent_config", why);

  TangencyData td;
  td.collinear_degenerate =
      *std::min_element(gaps.begin(), gaps.end()) < 1e-12;

  // c_ij: side A_iB_j lies on the K_C tangent line with normal acc[k],
  // k = 0 (A1B1), 1 (A2B1), 2 (A2B2), 3 (A1B2).
  const int side_of[2][2] = {{0, 3}, {1, 2}};
  const Vec3* av[2] = {&v[0], &v[1]};
  const Vec3* bv[2] = {&v[2], &v[3]};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double n = acc[side_of[i][j]];
      const Vec3 pt{p.rho_c * std::cos(n), p.rho_c * std::sin(n), 0};
      td.c[i][j] = pt;
      td.c_from_a[i][j] = dot(pt - *av[i], normalized(*bv[j] - *av[i]));
      td.c_from_b[i][j] = dot(pt - *bv[j], normalized(*av[i] - *bv[j]));
    }

  // b_ij: line A_iC_j touches K_B at the foot of its unit normal.
  const Vec3* cv[2] = {&v[4], &v[5]};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const Vec3 d = normalized(*cv[j] - *av[i]);
      Vec3 nrm{-d.y, d.x, 0};
      if (dot(nrm, *av[i]) < 0) nrm = nrm * -1.0;
      const Vec3 pt = nrm * p.rho_b;
      td.b[i][j] = pt;
      td.b_from_a[i][j] = dot(pt - *av[i], d);
      td.b_from_c[i][j] = dot(pt - *cv[j], normalized(*av[i] - *cv[j]));
    }

  double dsum = 0;
  {
    std::array<std::pair<Vec3, Vec3>, 4> bc{
        {{v[2], v[4]}, {v[4], v[3]}, {v[3], v[5]}, {v[5], v[2]}}};
    for (const auto& [q0, q1] : bc) {
      const Vec3 d = q1 - q0;
      dsum += std::abs(-d.y * q0.x + d.x * q0.y) / std::hypot(d.x, d.y);
    }
  }
  td.rho_a = dsum / 4;
  td.rho_a_spread = rep.ka_spread;

  for (auto& vert : v) vert = vert + p.center;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      td.c[i][j] = td.c[i][j] + p.center;
      td.b[i][j] = td.b[i][j] + p.center;
    }

  Type3FlatResult res{assemble(v), td};
  return res;
}

std::array<Equator, 3> equators(const OctahedronLabels& L) {
  return {Equator{{L.a1, L.b1, L.a2, L.b2}}, Equator{{L.a1, L.c1, L.a2, L.c2}},
          Equator{{L.b1, L.c1, L.b2, L.c2}}};
}

OctahedronLabels labels_from_surface(const PolyhedralSurface& s) {
  OctahedronLabels L;
  auto get = [&](const char* name) {
    auto it = s.labels.find(name);
    require(it != s.labels.end(), "invalid_params",
            std::string("surface is missing vertex label ") + name);
    return it->second;
  };
  L.a1 = get("A1");
  L.a2 = get("A2");
  L.b1 = get("B1");
  L.b2 = get("B2");
  L.c1 = get("C1");
  L.c2 = get("C2");
  return L;
}

}  // namespace bellows
