#pragma once

#include <array>
#include <vector>

#include "bellows/surface.hpp"
#include "bellows/vec3.hpp"

namespace bellows {

using Triangle = std::array<Vec3, 3>;

// Closest point on triangle (a,b,c) to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t);
double point_triangle_distance(const Vec3& p, const Triangle& t);

// Minimum distance between segments [p1,q1] and [p2,q2].
double segment_segment_distance(const Vec3& p1, const Vec3& q1,
                                const Vec3& p2, const Vec3& q2);

// Minimum distance between two triangles; exactly 0 when one pierces the
// other, otherwise the min over vertex-triangle and edge-edge features.
double triangle_triangle_distance(const Triangle& t1, const Triangle& t2);

// Two triangles "intersect" when their distance drops below eps.  This is the
// distance-threshold predicate used everywhere in the library; eps is an
// absolute length here (callers scale it by the surface diameter).
bool triangle_intersection(const Triangle& t1, const Triangle& t2, double eps);

// Adjacency-aware variant for faces of one surface that share vertices.
// Shared vertices are combinatorial (shared indices).  The shared corner or
// edge is pulled back by a fixed fraction on both faces and the shrunk
// triangles are tested; faces sharing all three vertices never intersect.
bool face_pair_intersects(const PolyhedralSurface& s, int f1, int f2, double eps);

enum class Exec { serial, parallel };

// All face pairs (f1 < f2) closer than eps_rel * diameter, in lexicographic
// order.  Exec::parallel distributes pairs across OpenMP threads; both
// policies return bit-identical results.
std::vector<std::array<int, 2>> intersecting_face_pairs(const PolyhedralSurface& s,
                                                        double eps_rel = 1e-9,
                                                        Exec exec = Exec::parallel);

bool is_embedded(const PolyhedralSurface& s, double eps_rel = 1e-9,
                 Exec exec = Exec::parallel);

}  // namespace bellows
