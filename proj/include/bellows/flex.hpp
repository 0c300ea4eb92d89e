#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "bellows/surface.hpp"
#include "bellows/vec3.hpp"

namespace bellows {

// Rigid-motion gauge: six scalar coordinates held at fixed values. The
// pinned vertex keeps all three, the axis vertex keeps two (the axes chosen
// away from the pin-to-axis direction), the plane vertex keeps one. Frozen
// values stay bit-identical along a traced path.
struct GaugeFrame {
  int pinned = 0;
  int axis = 1;
  int plane = 2;
  std::array<int, 2> axis_frozen{1, 2};  // coordinate axes frozen at `axis`
  int plane_frozen = 2;                  // coordinate axis frozen at `plane`
  std::array<double, 6> values{};        // frozen values, in coords() order

  // flat coordinate indices 3*vertex+axis of the six frozen scalars
  std::array<int, 6> coords() const;
};

// Chooses well-conditioned frozen axes for the three vertices and records
// the current values. Throws invalid_params for degenerate triples.
GaugeFrame make_gauge(const PolyhedralSurface& s, int pinned, int axis,
                      int plane);

// Standard frame for labeled octahedra: A1 pinned, B1 axis, C1 plane. The
// triple spans a face, so the frame triangle is rigid and the chart stays
// regular along any flex.
GaugeFrame octahedron_gauge(const PolyhedralSurface& s);

// The driving coordinate of a trace: either the oriented dihedral angle at
// an edge (tracked continuously, so targets live on the unwrapped real
// line), or one vertex's z coordinate (the chart of choice near flat
// positions, where every dihedral is stationary).
struct DrivingCoord {
  enum class Kind { dihedral, vertex_height };
  Kind kind = Kind::dihedral;
  int index = 0;  // edge index or vertex index

  static DrivingCoord at_edge(int e) { return {Kind::dihedral, e}; }
  static DrivingCoord at_vertex_z(int v) { return {Kind::vertex_height, v}; }
};

// Principal driving value at a single surface (dihedral in (0, 2pi], or z).
double driving_value(const PolyhedralSurface& s, const DrivingCoord& d);

struct StepOptions {
  int max_iterations = 50;
  double tolerance = 1e-12;      // absolute, on squared lengths and driving
  double max_motion_rel = 0.25;  // per-step displacement cap, times diameter
};

// Squared lengths of all edges, in edge order.
std::vector<double> squared_lengths(const PolyhedralSurface& s);

// Per-edge defect (current squared length - reference squared length).
// Throws combinatorics_mismatch when the reference does not fit the surface.
std::vector<double> constraint_residual(const PolyhedralSurface& s,
                                        const std::vector<double>& ref_len2);

// Ascending singular values of the length-constraint Jacobian restricted to
// the gauge-free coordinates. On the flex variety the smallest is the flex
// direction; a healthy non-flat sample shows sigma[1]/sigma[0] >= 1e3.
std::vector<double> constraint_spectrum(const PolyhedralSurface& s,
                                        const GaugeFrame& g);

// One corrector solve: move the surface so every edge keeps its reference
// squared length (tolerance absolute) and the driving coordinate equals
// `target`, with the gauge coordinates untouched. A target equal to the
// current driving value returns the input unchanged.
// Errors: no_convergence, singular_jacobian, combinatorics_mismatch.
PolyhedralSurface flex_step(const PolyhedralSurface& cur,
                            const std::vector<double>& ref_len2,
                            const GaugeFrame& g, const DrivingCoord& d,
                            double target, const StepOptions& opt = {});

// A traced flex: strictly monotone driving values, vertex positions and the
// worst squared-length defect per sample. samples[0] is the start surface
// verbatim.
struct FlexPath {
  PolyhedralSurface base;
  GaugeFrame gauge;
  DrivingCoord driving;
  std::vector<double> t;
  std::vector<std::vector<Vec3>> samples;
  std::vector<double> residual;

  PolyhedralSurface at(int k) const;
  std::vector<PolyhedralSurface> surfaces() const;
};

// Predictor-corrector continuation from `start` (which must sit at driving
// value t_lo up to wrap, with residual below 1e-10) to t_hi over `n` evenly
// spaced samples. Failed steps are retried with halved substeps down to
// 1e-6 of the range. t_lo == t_hi or n == 1 gives the one-sample path.
FlexPath trace_flex(const PolyhedralSurface& start, const GaugeFrame& g,
                    const DrivingCoord& d, double t_lo, double t_hi, int n,
                    const StepOptions& opt = {});

// Unit first-order flex direction at a flat (coplanar) position: the
// out-of-plane kernel direction whose second-order in-plane correction
// exists (certified against the planar self-stresses), oriented so a small
// step makes the link of A1 self-intersecting. Errors:
// kernel_dimension_unexpected (kernel is not the flat-position shape),
// wrong_branch (no orientation yields the self-intersecting link).
std::vector<Vec3> flex_kickoff(const PolyhedralSurface& flat,
                               const GaugeFrame& g);

// Leave a flat position: second-order predictor along the kickoff direction
// plus Newton correction, landing at the given driving target (vertex
// height charts are the intended use). The sign of the target picks the
// side of the flat position.
PolyhedralSurface flex_launch(const PolyhedralSurface& flat,
                              const GaugeFrame& g, const DrivingCoord& d,
                              double target, const StepOptions& opt = {});

// CSV trace: header then one row per sample (t, x,y,z per vertex, residual).
void write_flex_csv(const FlexPath& path, std::ostream& out);
void write_flex_csv(const FlexPath& path, const std::string& filename);

// JSON round trip for replaying golden paths.
void write_flex_json(const FlexPath& path, const std::string& filename);
FlexPath read_flex_json(const std::string& filename);

}  // namespace bellows
