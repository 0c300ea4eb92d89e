#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "bellows/vec3.hpp"

namespace bellows {

// Closed oriented triangulated surface.  Construction goes through
// build_surface(), which validates closedness, orientation consistency and
// face non-degeneracy, and derives the edge tables.  Edge identity is
// combinatorial: two vertices with equal coordinates are still distinct
// vertices, and an edge is an unordered pair of vertex indices.
struct PolyhedralSurface {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;      // CCW as seen from outside
  std::vector<std::array<int, 2>> edges;      // v0 < v1, sorted lexicographically
  std::vector<std::array<int, 2>> edge_faces; // the two incident faces per edge
  std::map<std::string, int> labels;          // optional names for vertices

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }

  double edge_length(int e) const {
    return dist(vertices[edges[e][0]], vertices[edges[e][1]]);
  }
  // Index into `edges` for the unordered pair {a, b}; -1 if absent.
  int edge_index(int a, int b) const;

  // Length of the longest diagonal of the axis-aligned bounding box.  Used as
  // the reference scale for tolerances.
  double diameter() const;

  int labeled(const std::string& name) const;           // vertex index by label
  const Vec3& labeled_pos(const std::string& name) const;
};

// Validates and assembles a surface.  Throws Error with code
//  - degenerate_face      : a face with repeated vertices or (near-)zero area
//  - non_manifold_edge    : an edge incident to fewer or more than two faces
//  - orientation_mismatch : two faces traverse a shared edge in the same direction
//  - bad_index / unreferenced_vertex / too_few_faces for structural problems.
PolyhedralSurface build_surface(std::vector<Vec3> vertices,
                                std::vector<std::array<int, 3>> faces,
                                std::map<std::string, int> labels = {});

// Wavefront OBJ with 1-based indices.  Labels are not stored in OBJ.
void write_obj(const PolyhedralSurface& s, const std::string& path);
PolyhedralSurface read_obj(const std::string& path);

// JSON mesh with 0-based indices and a labels side-table.
std::string surface_to_json(const PolyhedralSurface& s);
PolyhedralSurface surface_from_json(const std::string& text);
void write_surface_json(const PolyhedralSurface& s, const std::string& path);
PolyhedralSurface read_surface_json(const std::string& path);

}  // namespace bellows
