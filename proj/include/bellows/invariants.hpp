#pragma once

#include <array>
#include <functional>
#include <vector>

#include "bellows/octahedron.hpp"
#include "bellows/surface.hpp"
#include "bellows/vec3.hpp"

namespace bellows {

// Oriented dihedral angle at an edge. The principal value is the rotation
// carrying the first face's half-plane onto the second around the edge, taken
// in (0, 2pi]: a flat edge (faces on opposite sides) gives pi, a convex cube
// edge pi/2, the same edge with reversed global orientation 3pi/2, and two
// faces folded onto each other 2pi. Independent of which incident face plays
// the role of the first. n1, n2 are unit normals of the two face planes taken
// with a common edge orientation, so they coincide exactly for a doubly
// covered edge and are opposite for a flat one.
struct DihedralAngle {
  int edge = -1;
  double alpha0 = 0;  // principal value in (0, 2pi]
  Vec3 n1, n2;
};

DihedralAngle dihedral_angle(const PolyhedralSurface& s, int edge);
double dihedral_value(const PolyhedralSurface& s, int edge);

// All principal values, indexed like s.edges.
std::vector<double> dihedral_values(const PolyhedralSurface& s);

// One continuously tracked dihedral angle along a sampled path. `values` are
// unwrapped reals (branch chosen so consecutive samples differ by less than
// pi); `offsets[k]` is the integer m with values[k] = principal_k + 2 pi m.
struct DihedralBranch {
  int edge = -1;
  std::vector<double> values;
  std::vector<int> offsets;
};

// Branch tracking over samples of one combinatorial surface in motion.
// Throws branch_ambiguity when a step is too large to resolve (the best 2pi
// shift of the principal value still lands within 1e-6 of the pi attribution
// limit), which signals under-sampling, and shape_mismatch when the samples
// disagree combinatorially.
std::vector<DihedralBranch> track_branches(const std::vector<PolyhedralSurface>& samples);

// Spherical link of a vertex: the unit-sphere polygon cut by the incident
// faces, scaled by `radius`. Entry i of `ring` is the neighbour vertex on the
// i-th incident edge in face order; arcs[i] is the plane angle of the face
// between ring[i] and ring[i+1] (an arc length on the unit link); interior[i]
// is the dihedral angle at the edge towards ring[i]. dirs[i] is the unit
// direction from the vertex to ring[i].
struct VertexLink {
  int vertex = -1;
  double radius = 0;
  std::vector<int> ring;
  std::vector<double> arcs;
  std::vector<double> interior;
  std::vector<Vec3> dirs;
};

// Requires radius below the shortest incident edge (radius_too_large).
VertexLink vertex_link(const PolyhedralSurface& s, int v, double radius);

enum class LinkShape { convex, self_intersecting, degenerate_flat };
const char* to_string(LinkShape shape);

// Classification of a quadrilateral link: degenerate-flat when all link
// vertices lie on one great circle, self-intersecting when opposite arcs
// cross. The links arising here (spherical isograms) are convex exactly when
// simple, so no separate reflex class exists.
LinkShape link_convexity(const VertexLink& q);

// (1/6) sum of det(v_i, v_j, v_k) over oriented faces; translation invariant
// for closed surfaces.
double oriented_volume(const PolyhedralSurface& s);

// Sum of |l| (pi - alpha_l) over edges, with principal values or with caller
// supplied per-edge angle values (e.g. tracked branches).
double total_mean_curvature(const PolyhedralSurface& s);
double total_mean_curvature(const PolyhedralSurface& s, const std::vector<double>& alphas);

// The formal Dehn data: one (edge length, angle value) pair per edge.
struct DehnVector {
  std::vector<std::array<double, 2>> entries;
};

DehnVector dehn_vector(const PolyhedralSurface& s);
DehnVector dehn_vector(const PolyhedralSurface& s, const std::vector<double>& alphas);

// Four-term sum over one equator of |l| f(alpha_l). The functional must
// represent a Q-linear map with f(pi) = 0 evaluated on its certified span;
// it reports angles outside the span by throwing (functional_undefined).
double equator_dehn_sum(const PolyhedralSurface& s, const Equator& eq,
                        const std::function<double(double)>& f);
double equator_dehn_sum(const PolyhedralSurface& s, const Equator& eq,
                        const std::function<double(double)>& f,
                        const std::vector<double>& alphas);

}  // namespace bellows
