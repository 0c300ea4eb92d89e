#include "bellows/intersect.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bellows {

// Ericson, "Real-Time Collision Detection", closest point on triangle.
Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t) {
  const Vec3 &a = t[0], &b = t[1], &c = t[2];
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + ab * v;
  }

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + ac * w;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + (c - b) * w;
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return a + ab * v + ac * w;
}

double point_triangle_distance(const Vec3& p, const Triangle& t) {
  return dist(p, closest_point_on_triangle(p, t));
}

// Ericson, closest points of two segments.
double segment_segment_distance(const Vec3& p1, const Vec3& q1,
                                const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
  double s, t;
  const double tiny = 1e-300;
  if (a <= tiny && e <= tiny) return dist(p1, p2);
  if (a <= tiny) {
    s = 0.0;
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = dot(d1, r);
    if (e <= tiny) {
      t = 0.0;
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = dot(d1, d2);
      const double denom = a * e - b * b;
      s = denom != 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return dist(p1 + d1 * s, p2 + d2 * t);
}

namespace {

// Does segment [p,q] cross the plane of t strictly inside the triangle?
bool segment_pierces_triangle(const Vec3& p, const Vec3& q, const Triangle& t) {
  const Vec3 n = cross(t[1] - t[0], t[2] - t[0]);
  const double dp = dot(n, p - t[0]);
  const double dq = dot(n, q - t[0]);
  if (dp == 0.0 || dq == 0.0) return false;  // touching handled by distance path
  if ((dp > 0.0) == (dq > 0.0)) return false;
  const double u = dp / (dp - dq);
  const Vec3 x = p + (q - p) * u;
  // Inside test via consistent signs against the edges.
  const double s0 = dot(n, cross(t[1] - t[0], x - t[0]));
  const double s1 = dot(n, cross(t[2] - t[1], x - t[1]));
  const double s2 = dot(n, cross(t[0] - t[2], x - t[2]));
  return (s0 > 0.0 && s1 > 0.0 && s2 > 0.0) || (s0 < 0.0 && s1 < 0.0 && s2 < 0.0);
}

bool triangles_pierce(const Triangle& t1, const Triangle& t2) {
  for (int k = 0; k < 3; ++k) {
    if (segment_pierces_triangle(t1[k], t1[(k + 1) % 3], t2)) return true;
    if (segment_pierces_triangle(t2[k], t2[(k + 1) % 3], t1)) return true;
  }
  return false;
}

}  // namespace

double triangle_triangle_distance(const Triangle& t1, const Triangle& t2) {
  if (triangles_pierce(t1, t2)) return 0.0;
  double d = point_triangle_distance(t1[0], t2);
  for (int k = 0; k < 3; ++k) {
    d = std::min(d, point_triangle_distance(t1[k], t2));
    d = std::min(d, point_triangle_distance(t2[k], t1));
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      d = std::min(d, segment_segment_distance(t1[i], t1[(i + 1) % 3],
                                               t2[j], t2[(j + 1) % 3]));
  return d;
}

bool triangle_intersection(const Triangle& t1, const Triangle& t2, double eps) {
  return triangle_triangle_distance(t1, t2) < eps;
}

namespace {

constexpr double kShrink = 1e-4;

// Pull the corner at local index `i` toward the opposite edge midpoint.
void shrink_corner(Triangle& t, int i) {
  const Vec3 mid = (t[(i + 1) % 3] + t[(i + 2) % 3]) * 0.5;
  t[i] += (mid - t[i]) * kShrink;
}

// Pull the edge {i,j} toward the remaining corner.
void shrink_edge(Triangle& t, int i, int j) {
  const int k = 3 - i - j;
  t[i] += (t[k] - t[i]) * kShrink;
  t[j] += (t[k] - t[j]) * kShrink;
}

}  // namespace

bool face_pair_intersects(const PolyhedralSurface& s, int f1, int f2, double eps) {
  const auto& a = s.faces[f1];
  const auto& b = s.faces[f2];
  Triangle t1{s.vertices[a[0]], s.vertices[a[1]], s.vertices[a[2]]};
  Triangle t2{s.vertices[b[0]], s.vertices[b[1]], s.vertices[b[2]]};

  // Find shared vertex indices (combinatorial identity).
  std::vector<std::array<int, 2>> shared;  // local indices (in t1, in t2)
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (a[i] == b[j]) shared.push_back({i, j});

  if (shared.size() >= 3) return false;  // same face
  if (shared.empty()) return triangle_intersection(t1, t2, eps);

  if (shared.size() == 1) {
    shrink_corner(t1, shared[0][0]);
    shrink_corner(t2, shared[0][1]);
  } else {
    shrink_edge(t1, shared[0][0], shared[1][0]);
    shrink_edge(t2, shared[0][1], shared[1][1]);
  }
  return triangle_intersection(t1, t2, eps);
}

std::vector<std::array<int, 2>> intersecting_face_pairs(const PolyhedralSurface& s,
                                                        double eps_rel, Exec exec) {
  const int nf = s.face_count();
  const double eps = eps_rel * s.diameter();
  const int npairs = nf * (nf - 1) / 2;

  // Flatten (f1,f2), f1<f2, to a linear index so the parallel loop is a plain
  // range; hit flags are written independently, so the result is identical to
  // the serial pass.
  std::vector<char> hit(npairs, 0);
  auto unflatten = [nf](int idx, int& i, int& j) {
    // row i has (nf-1-i) entries starting at offset i*nf - i*(i+1)/2 - i ... walk rows
    i = 0;
    int row = nf - 1;
    while (idx >= row) { idx -= row; ++i; --row; }
    j = i + 1 + idx;
  };

  if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (int idx = 0; idx < npairs; ++idx) {
      int i, j;
      unflatten(idx, i, j);
      if (face_pair_intersects(s, i, j, eps)) hit[idx] = 1;
    }
  } else {
    for (int idx = 0; idx < npairs; ++idx) {
      int i, j;
      unflatten(idx, i, j);
      if (face_pair_intersects(s, i, j, eps)) hit[idx] = 1;
    }
  }

  std::vector<std::array<int, 2>> out;
  for (int idx = 0; idx < npairs; ++idx) {
    if (!hit[idx]) continue;
    int i, j;
    unflatten(idx, i, j);
    out.push_back({i, j});
  }
  return out;
}

bool is_embedded(const PolyhedralSurface& s, double eps_rel, Exec exec) {
  return intersecting_face_pairs(s, eps_rel, exec).empty();
}

}  // namespace bellows
