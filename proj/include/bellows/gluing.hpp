#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bellows/relations.hpp"
#include "bellows/surface.hpp"

namespace bellows {

// Face-to-face gluing data. vertex_map[k] names the vertex identified with
// corner k of face1 as stored; for glue_external those are vertices of the
// added surface, for glue_internal vertices of the same surface.
// p2_label_suffix is appended to every label of the added surface (external
// gluing only); on a remaining name clash the receiving surface wins.
struct GluingSpec {
  int face1 = -1;
  int face2 = -1;
  std::array<int, 3> vertex_map{-1, -1, -1};
  std::string p2_label_suffix;
};

// Index of the face with vertex set {a, b, c}, -1 if absent.
int face_index(const PolyhedralSurface& s, int a, int b, int c);

// Glues p2 onto p1 along spec.face1 (of p1) and spec.face2 (of p2). p2 is
// positioned by the unique direct isometry sending the matched corners of
// face2 onto face1; both glued faces are removed and their vertices
// identified, keeping p1's coordinates bit-stable. When the correspondence
// carries face2's orientation onto face1's (instead of cancelling it), all
// of p2's faces are reversed so the result stays consistently oriented; the
// contribution sign sigma (+1 kept, -1 reversed) satisfies
// vol(result) = vol(p1) + sigma * vol(p2) and is written to *sigma_out.
// Errors: incongruent_faces, orientation_conflict.
PolyhedralSurface glue_external(const PolyhedralSurface& p1,
                                const PolyhedralSurface& p2,
                                const GluingSpec& spec,
                                int* sigma_out = nullptr);

// Glues two faces of one surface that coincide in space (corner positions
// match under the correspondence within 1e-9). Both faces are removed and
// corresponding vertices merged; edges left without any face disappear.
// Errors: faces_do_not_coincide, non_manifold_result.
PolyhedralSurface glue_internal(const PolyhedralSurface& p,
                                const GluingSpec& spec);

// Splits one face into three at an interior point given in barycentric
// coordinates on the face's stored corners. The new edges are flat, so every
// surface invariant survives. Errors: point_not_interior.
PolyhedralSurface subdivide_face(const PolyhedralSurface& p, int face,
                                 const Vec3& barycentric);

struct AssemblyStep {
  std::string op;  // glue_external | glue_internal | subdivide_face
  std::string detail;
  int sigma = 1;
  int class_index = 0;  // class the result belongs to
};

struct AssemblyTrace {
  std::vector<AssemblyStep> steps;
  int class_index = 0;
};

std::string assembly_trace_to_json(const AssemblyTrace& t);

// The Steffen polyhedron: a rigid tetrahedron DEFL (|DE|=|EF|=|FL|=|LD|=12,
// |DF|=17, |EL|=11) and two copies of one type-1 octahedron
// (|A1B1|=|A2B2|=5, |A1B2|=|A2B1|=11, |A1C1|=|A2C2|=|C1B2|=|C2B1|=12,
// |B1C1|=|B2C2|=|A2C1|=|A1C2|=10), glued as D=C1, E=B2, L=A1 and E=A1',
// F=C1', L=B2', then closed up internally along the coincident triangles
// LEC2 and LEC2'. Vertices keep labels D,E,F,L,A2,B1,C2 plus A2d,B1d for
// the second copy's free vertices.
struct SteffenResult {
  PolyhedralSurface surface;
  AssemblyTrace trace;
  double t = 0;         // flex parameter of the first octahedron
  double t_dagger = 0;  // solved flex parameter of the second copy
  double coupling_residual = 0;  // |C2' - C2| before the merge
};

// t is the first octahedron's hinge angle at A1B1. The second copy's
// parameter is solved so C2' meets C2 on their common circle around EL.
// Errors: coupling_unsolvable, plus construction errors for t outside the
// octahedron's own range.
SteffenResult build_steffen(double t);

// Empirically usable parameter window (coupling solvable and the linkage
// comfortably away from its closure endpoints). Discovered by scanning, so
// the endpoints are reported values, not asserted sharp bounds.
std::pair<double, double> steffen_flex_window();

// A reference parameter inside the window at which the polyhedron is
// embedded.
double steffen_reference_t();

struct SteffenScanReport {
  std::vector<double> t;
  std::vector<double> t_dagger;
  std::vector<double> volume;
  std::vector<double> mean_curvature;  // tracked branches
  std::vector<double> coupling_residual;
  std::vector<int> embedded;  // 0/1 per sample
  double volume_spread = 0;
  double curvature_spread = 0;
  double max_length_drift = 0;  // worst |edge length - reference| over samples
  int embedded_count = 0;
  DehnReport dehn;
};

// Builds the polyhedron at `samples` evenly spaced parameters, couplings
// solved sequentially by continuation, per-sample measurements in parallel.
SteffenScanReport steffen_flex_scan(double t_lo, double t_hi, int samples);
SteffenScanReport steffen_flex_scan(int samples);  // over steffen_flex_window

std::string steffen_scan_to_json(const SteffenScanReport& r);
void write_steffen_scan_csv(const SteffenScanReport& r, std::ostream& out);
void write_steffen_scan_csv(const SteffenScanReport& r,
                            const std::string& filename);

}  // namespace bellows
