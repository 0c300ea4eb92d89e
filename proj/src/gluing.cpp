#include "bellows/gluing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "bellows/error.hpp"
#include "bellows/flex.hpp"
#include "bellows/intersect.hpp"
#include "bellows/invariants.hpp"
#include "bellows/octahedron.hpp"

namespace bellows {

namespace {

constexpr double kPi = 3.14159265358979323846;

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

struct Frame {
  Vec3 origin, e1, e2, e3;
};

Frame triangle_frame(const Vec3& p, const Vec3& q, const Vec3& r) {
  Frame f;
  f.origin = p;
  f.e1 = normalized(q - p);
  Vec3 w = r - p;
  w -= f.e1 * dot(w, f.e1);
  f.e2 = normalized(w);
  f.e3 = cross(f.e1, f.e2);
  return f;
}

// Direct isometry matching `from`'s triangle onto `to`'s, applied to x.
Vec3 transfer(const Frame& to, const Frame& from, const Vec3& x) {
  const Vec3 d = x - from.origin;
  return to.origin + to.e1 * dot(d, from.e1) + to.e2 * dot(d, from.e2) +
         to.e3 * dot(d, from.e3);
}

void check_spec(const PolyhedralSurface& p1, const PolyhedralSurface& p2,
                const GluingSpec& spec, bool internal) {
  require(spec.face1 >= 0 && spec.face1 < p1.face_count(), "invalid_params",
          "face1 out of range");
  require(spec.face2 >= 0 && spec.face2 < p2.face_count(), "invalid_params",
          "face2 out of range");
  if (internal) {
    require(spec.face1 != spec.face2, "invalid_params",
            "internal gluing needs two distinct faces");
  }
  std::array<int, 3> want = spec.vertex_map;
  std::array<int, 3> have = p2.faces[spec.face2];
  std::sort(want.begin(), want.end());
  std::sort(have.begin(), have.end());
  require(want == have, "invalid_params",
          "vertex_map must permute the corners of face2");
}

// +1 when the correspondence reverses face2's cyclic order (the two faces
// cancel across the gluing), -1 when it preserves it and the added surface
// has to be turned inside out.
int correspondence_parity(const std::array<int, 3>& image,
                          const std::array<int, 3>& face2) {
  for (int r = 0; r < 3; ++r) {
    if (image[0] == face2[r] && image[1] == face2[(r + 1) % 3] &&
        image[2] == face2[(r + 2) % 3]) {
      return -1;
    }
  }
  return 1;
}

}  // namespace

int face_index(const PolyhedralSurface& s, int a, int b, int c) {
  std::array<int, 3> want{a, b, c};
  std::sort(want.begin(), want.end());
  for (int f = 0; f < s.face_count(); ++f) {
    std::array<int, 3> have = s.faces[f];
    std::sort(have.begin(), have.end());
    if (have == want) return f;
  }
  return -1;
}

PolyhedralSurface glue_external(const PolyhedralSurface& p1,
                                const PolyhedralSurface& p2,
                                const GluingSpec& spec, int* sigma_out) {
  check_spec(p1, p2, spec, false);
  const std::array<int, 3> f1 = p1.faces[spec.face1];
  const std::array<int, 3>& m = spec.vertex_map;

  for (int k = 0; k < 3; ++k) {
    const double l1 = dist(p1.vertices[f1[k]], p1.vertices[f1[(k + 1) % 3]]);
    const double l2 = dist(p2.vertices[m[k]], p2.vertices[m[(k + 1) % 3]]);
    require(std::abs(l1 - l2) <= 1e-12 * std::max(l1, l2), "incongruent_faces",
            "side lengths differ under the correspondence");
  }

  const int sigma = correspondence_parity(m, p2.faces[spec.face2]);
  const Frame to =
      triangle_frame(p1.vertices[f1[0]], p1.vertices[f1[1]], p1.vertices[f1[2]]);
  const Frame from =
      triangle_frame(p2.vertices[m[0]], p2.vertices[m[1]], p2.vertices[m[2]]);

  std::vector<Vec3> verts = p1.vertices;
  std::vector<int> to_new(p2.vertex_count(), -1);
  for (int k = 0; k < 3; ++k) to_new[m[k]] = f1[k];
  for (int v = 0; v < p2.vertex_count(); ++v) {
    if (to_new[v] < 0) {
      to_new[v] = int(verts.size());
      verts.push_back(transfer(to, from, p2.vertices[v]));
    }
  }

  std::vector<std::array<int, 3>> faces;
  faces.reserve(size_t(p1.face_count() + p2.face_count()) - 2);
  for (int f = 0; f < p1.face_count(); ++f) {
    if (f != spec.face1) faces.push_back(p1.faces[f]);
  }
  for (int f = 0; f < p2.face_count(); ++f) {
    if (f == spec.face2) continue;
    std::array<int, 3> g{to_new[p2.faces[f][0]], to_new[p2.faces[f][1]],
                         to_new[p2.faces[f][2]]};
    if (sigma < 0) std::swap(g[1], g[2]);
    faces.push_back(g);
  }

  std::map<std::string, int> labels = p1.labels;
  for (const auto& [name, v] : p2.labels) {
    const std::string renamed = name + spec.p2_label_suffix;
    if (!labels.count(renamed)) labels[renamed] = to_new[v];
  }

  if (sigma_out) *sigma_out = sigma;
  try {
    return build_surface(std::move(verts), std::move(faces), std::move(labels));
  } catch (const Error& e) {
    if (e.code() == "orientation_mismatch") {
      fail("orientation_conflict",
           "glued surface cannot be consistently oriented");
    }
    throw;
  }
}

PolyhedralSurface glue_internal(const PolyhedralSurface& p,
                                const GluingSpec& spec) {
  check_spec(p, p, spec, true);
  const std::array<int, 3> f1 = p.faces[spec.face1];
  const std::array<int, 3>& m = spec.vertex_map;

  for (int k = 0; k < 3; ++k) {
    require(dist(p.vertices[f1[k]], p.vertices[m[k]]) < 1e-9,
            "faces_do_not_coincide",
            "corresponding corners are not at the same position");
  }

  // Union-find keeping the smaller index, so the receiving coordinates win.
  std::vector<int> root(p.vertex_count());
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  for (int k = 0; k < 3; ++k) {
    int a = find(f1[k]);
    int b = find(m[k]);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    root[b] = a;
  }

  std::vector<int> newid(p.vertex_count(), -1);
  std::vector<Vec3> verts;
  for (int v = 0; v < p.vertex_count(); ++v) {
    if (find(v) == v) {
      newid[v] = int(verts.size());
      verts.push_back(p.vertices[v]);
    }
  }

  std::vector<std::array<int, 3>> faces;
  faces.reserve(size_t(p.face_count()) - 2);
  for (int f = 0; f < p.face_count(); ++f) {
    if (f == spec.face1 || f == spec.face2) continue;
    faces.push_back({newid[find(p.faces[f][0])], newid[find(p.faces[f][1])],
                     newid[find(p.faces[f][2])]});
  }

  std::map<std::string, int> labels;
  for (const auto& [name, v] : p.labels) labels[name] = newid[find(v)];

  try {
    return build_surface(std::move(verts), std::move(faces), std::move(labels));
  } catch (const Error& e) {
    const std::string& c = e.code();
    if (c == "non_manifold_edge" || c == "orientation_mismatch" ||
        c == "unreferenced_vertex" || c == "too_few_faces" ||
        c == "degenerate_face") {
      fail("non_manifold_result",
           std::string("gluing degenerates the surface (") + e.what() + ")");
    }
    throw;
  }
}

PolyhedralSurface subdivide_face(const PolyhedralSurface& p, int face,
                                 const Vec3& barycentric) {
  require(face >= 0 && face < p.face_count(), "invalid_params",
          "face out of range");
  const double s = barycentric.x + barycentric.y + barycentric.z;
  bool interior = std::isfinite(s) && std::abs(s - 1.0) <= 1e-9;
  for (int k = 0; k < 3; ++k) interior = interior && barycentric[k] >= 1e-12;
  require(interior, "point_not_interior",
          "barycentric weights must be strictly positive and sum to 1");

  const std::array<int, 3> f = p.faces[face];
  const Vec3 pt = p.vertices[f[0]] * barycentric.x +
                  p.vertices[f[1]] * barycentric.y +
                  p.vertices[f[2]] * barycentric.z;

  std::vector<Vec3> verts = p.vertices;
  const int nv = int(verts.size());
  verts.push_back(pt);

  std::vector<std::array<int, 3>> faces;
  faces.reserve(size_t(p.face_count()) + 2);
  for (int g = 0; g < p.face_count(); ++g) {
    if (g != face) faces.push_back(p.faces[g]);
  }
  faces.push_back({f[0], f[1], nv});
  faces.push_back({f[1], f[2], nv});
  faces.push_back({f[2], f[0], nv});

  return build_surface(std::move(verts), std::move(faces), p.labels);
}

std::string assembly_trace_to_json(const AssemblyTrace& t) {
  nlohmann::json j;
  j["class_index"] = t.class_index;
  j["steps"] = nlohmann::json::array();
  for (const auto& s : t.steps) {
    j["steps"].push_back({{"op", s.op},
                          {"detail", s.detail},
                          {"sigma", s.sigma},
                          {"class_index", s.class_index}});
  }
  return j.dump(2);
}

namespace {

Type1Params steffen_octahedron_params(double t) {
  Type1Params q;
  q.len_a1b1 = 5;
  q.len_a1b2 = 11;
  q.len_a1c1 = 12;
  q.len_b1c1 = 10;
  q.len_a2c1 = 10;
  q.len_b2c1 = 12;
  q.t = t;
  return q;
}

// |DE|=|EF|=|FL|=|LD|=12, |DF|=17, |EL|=11.  The sign of F's out-of-plane
// coordinate picks one of the two mirror shapes; the negative choice is the
// one whose assembly embeds.
constexpr double kTetraFSign = -1.0;

PolyhedralSurface steffen_tetrahedron() {
  const Vec3 d{0, 0, 0};
  const Vec3 e{12, 0, 0};
  const double lx = 167.0 / 24.0;
  const Vec3 l{lx, std::sqrt(144.0 - lx * lx), 0};
  const double fx = 289.0 / 24.0;
  const double fy = (289.0 - 2.0 * fx * lx) / (2.0 * l.y);
  const Vec3 f{fx, fy, kTetraFSign * std::sqrt(289.0 - fx * fx - fy * fy)};

  std::vector<Vec3> v{d, e, f, l};
  std::vector<std::array<int, 3>> faces{
      {0, 1, 2}, {1, 0, 3}, {2, 1, 3}, {0, 2, 3}};
  const std::map<std::string, int> labels{
      {"D", 0}, {"E", 1}, {"F", 2}, {"L", 3}};
  PolyhedralSurface s = build_surface(v, faces, labels);
  if (oriented_volume(s) < 0) {
    for (auto& g : faces) std::swap(g[1], g[2]);
    s = build_surface(v, faces, labels);
  }
  return s;
}

GluingSpec correspondence_spec(const PolyhedralSurface& p1,
                               const PolyhedralSurface& p2, int face1,
                               int face2, const std::map<int, int>& image) {
  GluingSpec g;
  g.face1 = face1;
  g.face2 = face2;
  require(face1 >= 0 && face2 >= 0, "invalid_params", "gluing face not found");
  const std::array<int, 3> f1 = p1.faces[face1];
  for (int k = 0; k < 3; ++k) g.vertex_map[k] = image.at(f1[k]);
  (void)p2;
  return g;
}

struct CouplingSetup {
  Frame to;          // frame of the receiving triangle E, F, L
  Vec3 mid, e1, e2;  // circle frame around the EL axis, e1 towards C2
  double arc_lo = 0, arc_hi = 0;
  Type1Params base;
};

CouplingSetup coupling_setup(const PolyhedralSurface& s1) {
  CouplingSetup c;
  const Vec3 E = s1.labeled_pos("E");
  const Vec3 F = s1.labeled_pos("F");
  const Vec3 L = s1.labeled_pos("L");
  const Vec3 C2 = s1.labeled_pos("C2");
  c.to = triangle_frame(E, F, L);
  const Vec3 dax = normalized(L - E);
  c.mid = (L + E) * 0.5;
  Vec3 w = C2 - c.mid;
  w -= dax * dot(w, dax);
  c.e1 = normalized(w);
  c.e2 = cross(dax, c.e1);
  c.base = steffen_octahedron_params(0);
  const auto r = type1_flex_range(c.base);
  c.arc_lo = r.first;
  c.arc_hi = r.second;
  return c;
}

// Both C2 and its copy move on the circle around EL; the coupling solves for
// the copy's flex parameter by the signed angle from C2, which changes sign
// where the plain distance only touches zero.
double coupling_angle(const CouplingSetup& c, double fr) {
  Type1Params q = c.base;
  q.t = arc_point(c.arc_lo, c.arc_hi, fr);
  const PolyhedralSurface o = bricard_type1(q);
  const Frame from = triangle_frame(o.labeled_pos("A1"), o.labeled_pos("C1"),
                                    o.labeled_pos("B2"));
  const Vec3 copy = transfer(c.to, from, o.labeled_pos("C2"));
  const Vec3 w = copy - c.mid;
  return std::atan2(dot(w, c.e2), dot(w, c.e1));
}

double solve_coupling(const CouplingSetup& c, double hint) {
  // The matching configuration tends to sit near a fold of the copy's flex
  // arc, where the angle has square-root behaviour; cosine clustering keeps
  // the scan dense there.
  const int n = 481;
  double prev_fr = 0, prev_v = 0;
  bool have_prev = false;
  std::vector<std::array<double, 2>> brackets;
  for (int i = 0; i < n; ++i) {
    double fr = 0.5 - 0.5 * std::cos(kPi * i / (n - 1));
    fr = std::min(1.0 - 1e-7, std::max(1e-7, fr));
    double v;
    try {
      v = coupling_angle(c, fr);
    } catch (const Error&) {
      have_prev = false;
      continue;
    }
    if (have_prev && (v < 0) != (prev_v < 0) && std::abs(v - prev_v) < 1.0) {
      brackets.push_back({prev_fr, fr});
    }
    prev_fr = fr;
    prev_v = v;
    have_prev = true;
  }
  require(!brackets.empty(), "coupling_unsolvable",
          "no flex of the copy places its C2 at the target");

  size_t pick = 0;
  if (hint >= 0) {
    double best = 1e300;
    for (size_t i = 0; i < brackets.size(); ++i) {
      const double mid = 0.5 * (brackets[i][0] + brackets[i][1]);
      if (std::abs(mid - hint) < best) {
        best = std::abs(mid - hint);
        pick = i;
      }
    }
  }

  double a = brackets[pick][0], b = brackets[pick][1];
  double fa = coupling_angle(c, a);
  for (int it = 0; it < 80 && b - a > 1e-17; ++it) {
    const double mmid = 0.5 * (a + b);
    const double fm = coupling_angle(c, mmid);
    if (fm == 0) {
      a = b = mmid;
      break;
    }
    if ((fa < 0) == (fm < 0)) {
      a = mmid;
      fa = fm;
    } else {
      b = mmid;
    }
  }
  return 0.5 * (a + b);
}

struct SteffenPrep {
  double t = 0;
  double fr = 0;
  double t_dagger = 0;
  int sigma1 = 1;
  PolyhedralSurface s1;
};

SteffenPrep steffen_prepare(double t, double hint) {
  SteffenPrep prep;
  prep.t = t;
  Type1Params q = steffen_octahedron_params(t);
  const PolyhedralSurface octa = bricard_type1(q);
  const PolyhedralSurface tet = steffen_tetrahedron();

  const GluingSpec g1 = correspondence_spec(
      octa, tet,
      face_index(octa, octa.labeled("C1"), octa.labeled("B2"),
                 octa.labeled("A1")),
      face_index(tet, tet.labeled("D"), tet.labeled("E"), tet.labeled("L")),
      {{octa.labeled("C1"), tet.labeled("D")},
       {octa.labeled("B2"), tet.labeled("E")},
       {octa.labeled("A1"), tet.labeled("L")}});
  prep.s1 = glue_external(octa, tet, g1, &prep.sigma1);

  const CouplingSetup c = coupling_setup(prep.s1);
  prep.fr = solve_coupling(c, hint);
  prep.t_dagger = arc_point(c.arc_lo, c.arc_hi, prep.fr);
  return prep;
}

SteffenResult steffen_finish(const SteffenPrep& prep) {
  SteffenResult out;
  out.t = prep.t;
  out.t_dagger = prep.t_dagger;

  const PolyhedralSurface octa2 =
      bricard_type1(steffen_octahedron_params(prep.t_dagger));
  const PolyhedralSurface& s1 = prep.s1;

  GluingSpec g2 = correspondence_spec(
      s1, octa2,
      face_index(s1, s1.labeled("E"), s1.labeled("F"), s1.labeled("L")),
      face_index(octa2, octa2.labeled("A1"), octa2.labeled("C1"),
                 octa2.labeled("B2")),
      {{s1.labeled("E"), octa2.labeled("A1")},
       {s1.labeled("F"), octa2.labeled("C1")},
       {s1.labeled("L"), octa2.labeled("B2")}});
  g2.p2_label_suffix = "d";
  int sigma2 = 1;
  const PolyhedralSurface s2 = glue_external(s1, octa2, g2, &sigma2);

  out.coupling_residual = dist(s2.labeled_pos("C2"), s2.labeled_pos("C2d"));

  const GluingSpec g3 = correspondence_spec(
      s2, s2,
      face_index(s2, s2.labeled("L"), s2.labeled("E"), s2.labeled("C2")),
      face_index(s2, s2.labeled("L"), s2.labeled("E"), s2.labeled("C2d")),
      {{s2.labeled("L"), s2.labeled("L")},
       {s2.labeled("E"), s2.labeled("E")},
       {s2.labeled("C2"), s2.labeled("C2d")}});
  out.surface = glue_internal(s2, g3);

  out.trace.steps = {
      {"glue_external",
       "tetrahedron DEFL onto octahedron face C1 B2 A1 (D=C1, E=B2, L=A1)",
       prep.sigma1, 1},
      {"glue_external",
       "second octahedron copy onto face E F L (E=A1d, F=C1d, L=B2d)", sigma2,
       2},
      {"glue_internal", "coincident faces L E C2 and L E C2d merged (C2d=C2)",
       1, 3},
  };
  out.trace.class_index = 3;
  return out;
}

}  // namespace

SteffenResult build_steffen(double t) {
  return steffen_finish(steffen_prepare(t, -1));
}

std::pair<double, double> steffen_flex_window() { return {4.1, 4.9}; }

double steffen_reference_t() { return 4.5; }

SteffenScanReport steffen_flex_scan(double t_lo, double t_hi, int samples) {
  require(samples >= 2, "invalid_params", "need at least two samples");
  const int n = samples;
  SteffenScanReport r;
  r.t.resize(n);
  r.t_dagger.resize(n);
  r.volume.resize(n);
  r.mean_curvature.resize(n);
  r.coupling_residual.resize(n);
  r.embedded.resize(n);

  std::vector<SteffenPrep> preps;
  preps.reserve(n);
  double hint = -1;
  for (int k = 0; k < n; ++k) {
    const double tk = t_lo + (t_hi - t_lo) * k / (n - 1);
    preps.push_back(steffen_prepare(wrap2pi(tk), hint));
    hint = preps.back().fr;
  }

  std::vector<SteffenResult> built(n);
  std::vector<std::pair<std::string, std::string>> errs(n);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    try {
      built[k] = steffen_finish(preps[k]);
      r.volume[k] = oriented_volume(built[k].surface);
      r.embedded[k] =
          is_embedded(built[k].surface, 1e-9, Exec::serial) ? 1 : 0;
    } catch (const Error& e) {
      errs[k] = {e.code(), e.what()};
    } catch (const std::exception& e) {
      errs[k] = {"internal_error", e.what()};
    }
  }
  for (const auto& [code, msg] : errs) {
    require(code.empty(), code, msg);
  }

  for (int k = 0; k < n; ++k) {
    r.t[k] = built[k].t;
    r.t_dagger[k] = built[k].t_dagger;
    r.coupling_residual[k] = built[k].coupling_residual;
  }

  std::vector<PolyhedralSurface> surfs;
  surfs.reserve(n);
  for (int k = 0; k < n; ++k) surfs.push_back(built[k].surface);

  const int ne = surfs.front().edge_count();
  for (int k = 0; k < n; ++k) {
    for (int e = 0; e < ne; ++e) {
      r.max_length_drift =
          std::max(r.max_length_drift,
                   std::abs(surfs[k].edge_length(e) - surfs[0].edge_length(e)));
    }
  }

  const auto branches = track_branches(surfs);
  for (int k = 0; k < n; ++k) {
    std::vector<double> alphas(ne);
    for (int e = 0; e < ne; ++e) alphas[e] = branches[e].values[k];
    r.mean_curvature[k] = total_mean_curvature(surfs[k], alphas);
  }

  const auto [vmin, vmax] = std::minmax_element(r.volume.begin(), r.volume.end());
  r.volume_spread = *vmax - *vmin;
  const auto [cmin, cmax] =
      std::minmax_element(r.mean_curvature.begin(), r.mean_curvature.end());
  r.curvature_spread = *cmax - *cmin;
  r.embedded_count = std::accumulate(r.embedded.begin(), r.embedded.end(), 0);

  FlexPath path;
  path.base = surfs.front();
  path.gauge = make_gauge(path.base, 0, 1, 2);
  path.driving = DrivingCoord::at_vertex_z(path.base.labeled("F"));
  path.t = r.t;
  const auto ref_sq = squared_lengths(path.base);
  for (int k = 0; k < n; ++k) {
    path.samples.push_back(surfs[k].vertices);
    const auto res = constraint_residual(surfs[k], ref_sq);
    double worst = 0;
    for (double v : res) worst = std::max(worst, std::abs(v));
    path.residual.push_back(worst);
  }
  r.dehn = verify_dehn_constancy(path, branches);
  return r;
}

SteffenScanReport steffen_flex_scan(int samples) {
  const auto [lo, hi] = steffen_flex_window();
  return steffen_flex_scan(lo, hi, samples);
}

std::string steffen_scan_to_json(const SteffenScanReport& r) {
  nlohmann::json j;
  j["samples"] = r.t.size();
  j["t"] = r.t;
  j["t_dagger"] = r.t_dagger;
  j["volume"] = r.volume;
  j["mean_curvature"] = r.mean_curvature;
  j["coupling_residual"] = r.coupling_residual;
  j["embedded"] = r.embedded;
  j["volume_spread"] = r.volume_spread;
  j["curvature_spread"] = r.curvature_spread;
  j["max_length_drift"] = r.max_length_drift;
  j["embedded_count"] = r.embedded_count;
  j["dehn"] = nlohmann::json::parse(dehn_report_to_json(r.dehn));
  return j.dump(2);
}

void write_steffen_scan_csv(const SteffenScanReport& r, std::ostream& out) {
  out << "t,t_dagger,volume,mean_curvature,coupling_residual,embedded\n";
  out.precision(17);
  for (size_t k = 0; k < r.t.size(); ++k) {
    out << r.t[k] << ',' << r.t_dagger[k] << ',' << r.volume[k] << ','
        << r.mean_curvature[k] << ',' << r.coupling_residual[k] << ','
        << r.embedded[k] << '\n';
  }
}

void write_steffen_scan_csv(const SteffenScanReport& r,
                            const std::string& filename) {
  std::ofstream out(filename);
  require(out.good(), "io_error", "cannot open '" + filename + "' for writing");
  write_steffen_scan_csv(r, out);
  require(out.good(), "io_error", "write failed for '" + filename + "'");
}

}  // namespace bellows
