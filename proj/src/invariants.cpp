#include "bellows/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "bellows/error.hpp"

namespace bellows {

namespace {

const double kPi = std::acos(-1.0);

// Whether face f walks the edge in the direction v0 to v1.
bool face_traverses(const PolyhedralSurface& s, int f, int v0, int v1) {
  const auto& t = s.faces[f];
  for (int i = 0; i < 3; ++i) {
    if (t[i] == v0 && t[(i + 1) % 3] == v1) return true;
  }
  return false;
}

int opposite_vertex(const PolyhedralSurface& s, int f, int v0, int v1) {
  for (int v : s.faces[f]) {
    if (v != v0 && v != v1) return v;
  }
  fail("degenerate_face", "face repeats an edge vertex");
}

// Unit in-plane direction from the edge into face f, perpendicular to d.
Vec3 face_wing(const PolyhedralSurface& s, int f, int v0, int v1, const Vec3& d) {
  const Vec3 w = s.vertices[opposite_vertex(s, f, v0, v1)] - s.vertices[v0];
  const Vec3 u = w - d * dot(w, d);
  const double len = norm(u);
  require(len > 0, "degenerate_edge", "incident face collapses onto the edge");
  return u / len;
}

double principal_range(double a) {
  // atan2 yields (-pi, pi]; shift the non-positive half up to get (0, 2pi].
  return a <= 0 ? a + 2 * kPi : a;
}

void check_same_shape(const PolyhedralSurface& a, const PolyhedralSurface& b) {
  require(a.faces == b.faces && a.edges == b.edges, "shape_mismatch",
          "samples differ combinatorially");
}

// P strictly inside the minor arc from A to B, where nab is the unit normal
// of the arc's great circle (A x B direction) and all inputs are unit.
bool inside_arc(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& nab) {
  const double tol = 1e-12;
  return dot(cross(a, p), nab) > tol && dot(cross(p, b), nab) > tol;
}

bool arcs_cross(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Vec3 n1 = cross(a, b);
  Vec3 n2 = cross(c, d);
  const double l1 = norm(n1), l2 = norm(n2);
  if (l1 < 1e-12 || l2 < 1e-12) return false;
  n1 = n1 / l1;
  n2 = n2 / l2;
  Vec3 t = cross(n1, n2);
  const double lt = norm(t);
  if (lt < 1e-12) return false;  // same great circle; flat case handled before
  t = t / lt;
  for (int sgn : {1, -1}) {
    const Vec3 p = t * double(sgn);
    if (inside_arc(p, a, b, n1) && inside_arc(p, c, d, n2)) return true;
  }
  return false;
}

std::vector<double> edge_lengths(const PolyhedralSurface& s) {
  std::vector<double> out;
  out.reserve(s.edges.size());
  for (const auto& e : s.edges) {
    out.push_back(dist(s.vertices[e[0]], s.vertices[e[1]]));
  }
  return out;
}

}  // namespace

DihedralAngle dihedral_angle(const PolyhedralSurface& s, int edge) {
  require(edge >= 0 && edge < int(s.edges.size()), "bad_index",
          "edge index out of range");
  const int v0 = s.edges[edge][0];
  const int v1 = s.edges[edge][1];
  const int f1 = s.edge_faces[edge][0];
  const int f2 = s.edge_faces[edge][1];

  Vec3 d = s.vertices[v1] - s.vertices[v0];
  const double len = norm(d);
  require(len > 0, "degenerate_edge", "edge has zero length");
  d = d / len;
  // Orient along f1's traversal so the value does not depend on which of the
  // two faces is listed first.
  if (!face_traverses(s, f1, v0, v1)) d = -d;

  const Vec3 u1 = face_wing(s, f1, v0, v1, d);
  const Vec3 u2 = face_wing(s, f2, v0, v1, d);

  DihedralAngle out;
  out.edge = edge;
  out.alpha0 = principal_range(std::atan2(dot(cross(u2, u1), d), dot(u1, u2)));
  out.n1 = cross(d, u1);
  out.n2 = cross(d, u2);
  return out;
}

double dihedral_value(const PolyhedralSurface& s, int edge) {
  return dihedral_angle(s, edge).alpha0;
}

std::vector<double> dihedral_values(const PolyhedralSurface& s) {
  std::vector<double> out;
  out.reserve(s.edges.size());
  for (int e = 0; e < int(s.edges.size()); ++e) {
    out.push_back(dihedral_value(s, e));
  }
  return out;
}

std::vector<DihedralBranch> track_branches(const std::vector<PolyhedralSurface>& samples) {
  require(!samples.empty(), "invalid_params", "no samples");
  for (const auto& s : samples) check_same_shape(samples.front(), s);

  const int ne = int(samples.front().edges.size());
  std::vector<DihedralBranch> out(ne);
  for (int e = 0; e < ne; ++e) {
    out[e].edge = e;
    out[e].values.reserve(samples.size());
    out[e].offsets.reserve(samples.size());
  }
  for (size_t k = 0; k < samples.size(); ++k) {
    for (int e = 0; e < ne; ++e) {
      const double p = dihedral_value(samples[k], e);
      if (k == 0) {
        out[e].values.push_back(p);
        out[e].offsets.push_back(0);
        continue;
      }
      const double prev = out[e].values.back();
      const double m = std::round((prev - p) / (2 * kPi));
      const double cand = p + 2 * kPi * m;
      require(std::abs(cand - prev) < kPi - 1e-6, "branch_ambiguity",
              "dihedral step too close to pi; resample more densely");
      out[e].values.push_back(cand);
      out[e].offsets.push_back(int(m));
    }
  }
  return out;
}

VertexLink vertex_link(const PolyhedralSurface& s, int v, double radius) {
  require(v >= 0 && v < int(s.vertices.size()), "bad_index",
          "vertex index out of range");
  require(radius > 0, "invalid_params", "link radius must be positive");

  // succ[a] = b for every incident face (v, a, b) in cyclic order.
  std::map<int, int> succ;
  int nfaces = 0;
  for (const auto& t : s.faces) {
    for (int i = 0; i < 3; ++i) {
      if (t[i] == v) {
        succ[t[(i + 1) % 3]] = t[(i + 2) % 3];
        ++nfaces;
      }
    }
  }
  require(nfaces >= 3, "invalid_params", "vertex has fewer than three faces");
  require(int(succ.size()) == nfaces, "non_manifold_edge",
          "vertex star is not a single cycle");

  VertexLink link;
  link.vertex = v;
  link.radius = radius;

  int start = succ.begin()->first;
  int cur = start;
  do {
    link.ring.push_back(cur);
    auto it = succ.find(cur);
    require(it != succ.end(), "non_manifold_edge", "vertex star is open");
    cur = it->second;
  } while (cur != start && int(link.ring.size()) <= nfaces);
  require(int(link.ring.size()) == nfaces, "non_manifold_edge",
          "vertex star is not a single cycle");

  const Vec3 p = s.vertices[v];
  for (int u : link.ring) {
    const Vec3 d = s.vertices[u] - p;
    const double len = norm(d);
    require(len > 0, "degenerate_edge", "incident edge has zero length");
    require(radius < len, "radius_too_large",
            "link radius reaches past a neighbour vertex");
    link.dirs.push_back(d / len);
  }
  const int n = nfaces;
  for (int i = 0; i < n; ++i) {
    link.arcs.push_back(angle_between(link.dirs[i], link.dirs[(i + 1) % n]));
    const int e = s.edge_index(v, link.ring[i]);
    link.interior.push_back(dihedral_value(s, e));
  }
  return link;
}

const char* to_string(LinkShape shape) {
  switch (shape) {
    case LinkShape::convex: return "convex";
    case LinkShape::self_intersecting: return "self-intersecting";
    case LinkShape::degenerate_flat: return "degenerate-flat";
  }
  return "unknown";
}

LinkShape link_convexity(const VertexLink& q) {
  const int n = int(q.dirs.size());
  require(n >= 3, "invalid_params", "link needs at least three vertices");

  double flat = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        flat = std::max(flat, std::abs(dot(q.dirs[i], cross(q.dirs[j], q.dirs[k]))));
      }
    }
  }
  if (flat < 1e-9) return LinkShape::degenerate_flat;

  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent around the cycle
      if (arcs_cross(q.dirs[i], q.dirs[(i + 1) % n], q.dirs[j],
                     q.dirs[(j + 1) % n])) {
        return LinkShape::self_intersecting;
      }
    }
  }
  return LinkShape::convex;
}

double oriented_volume(const PolyhedralSurface& s) {
  double six_v = 0;
  for (const auto& t : s.faces) {
    six_v += dot(s.vertices[t[0]], cross(s.vertices[t[1]], s.vertices[t[2]]));
  }
  return six_v / 6;
}

double total_mean_curvature(const PolyhedralSurface& s) {
  return total_mean_curvature(s, dihedral_values(s));
}

double total_mean_curvature(const PolyhedralSurface& s,
                            const std::vector<double>& alphas) {
  require(alphas.size() == s.edges.size(), "invalid_params",
          "need one angle per edge");
  const auto lens = edge_lengths(s);
  double out = 0;
  for (size_t e = 0; e < lens.size(); ++e) {
    out += lens[e] * (kPi - alphas[e]);
  }
  return out;
}

DehnVector dehn_vector(const PolyhedralSurface& s) {
  return dehn_vector(s, dihedral_values(s));
}

DehnVector dehn_vector(const PolyhedralSurface& s, const std::vector<double>& alphas) {
  require(alphas.size() == s.edges.size(), "invalid_params",
          "need one angle per edge");
  const auto lens = edge_lengths(s);
  DehnVector out;
  out.entries.reserve(lens.size());
  for (size_t e = 0; e < lens.size(); ++e) {
    out.entries.push_back({lens[e], alphas[e]});
  }
  return out;
}

double equator_dehn_sum(const PolyhedralSurface& s, const Equator& eq,
                        const std::function<double(double)>& f) {
  return equator_dehn_sum(s, eq, f, dihedral_values(s));
}

double equator_dehn_sum(const PolyhedralSurface& s, const Equator& eq,
                        const std::function<double(double)>& f,
                        const std::vector<double>& alphas) {
  require(alphas.size() == s.edges.size(), "invalid_params",
          "need one angle per edge");
  double out = 0;
  for (const auto& [u, v] : eq.edges()) {
    const int e = s.edge_index(u, v);
    out += dist(s.vertices[u], s.vertices[v]) * f(alphas[e]);
  }
  return out;
}

}  // namespace bellows
