#include "bellows/surface.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bellows/error.hpp"

namespace bellows {

int PolyhedralSurface::edge_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  std::array<int, 2> key{a, b};
  auto it = std::lower_bound(edges.begin(), edges.end(), key);
  if (it == edges.end() || *it != key) return -1;
  return static_cast<int>(it - edges.begin());
}

double PolyhedralSurface::diameter() const {
  Vec3 lo = vertices.front(), hi = vertices.front();
  for (const Vec3& v : vertices) {
    lo.x = std::min(lo.x, v.x); lo.y = std::min(lo.y, v.y); lo.z = std::min(lo.z, v.z);
    hi.x = std::max(hi.x, v.x); hi.y = std::max(hi.y, v.y); hi.z = std::max(hi.z, v.z);
  }
  return norm(hi - lo);
}

int PolyhedralSurface::labeled(const std::string& name) const {
  auto it = labels.find(name);
  require(it != labels.end(), "unknown_label", "no vertex labeled '" + name + "'");
  return it->second;
}

const Vec3& PolyhedralSurface::labeled_pos(const std::string& name) const {
  return vertices[labeled(name)];
}

PolyhedralSurface build_surface(std::vector<Vec3> vertices,
                                std::vector<std::array<int, 3>> faces,
                                std::map<std::string, int> labels) {
  const int nv = static_cast<int>(vertices.size());
  const int nf = static_cast<int>(faces.size());
  require(nf >= 4, "too_few_faces",
          "a closed surface needs at least 4 faces, got " + std::to_string(nf));

  for (const Vec3& v : vertices)
    require(std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z),
            "bad_coordinate", "non-finite vertex coordinate");

  PolyhedralSurface s;
  s.vertices = std::move(vertices);
  s.faces = std::move(faces);

  double scale = s.diameter();
  require(scale > 0.0, "degenerate_face", "all vertices coincide");

  std::vector<char> used(nv, 0);
  for (int f = 0; f < nf; ++f) {
    const auto& tri = s.faces[f];
    for (int k = 0; k < 3; ++k) {
      require(tri[k] >= 0 && tri[k] < nv, "bad_index",
              "face " + std::to_string(f) + " references vertex " + std::to_string(tri[k]));
      used[tri[k]] = 1;
    }
    require(tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2],
            "degenerate_face", "face " + std::to_string(f) + " repeats a vertex");
    const Vec3 n = cross(s.vertices[tri[1]] - s.vertices[tri[0]],
                         s.vertices[tri[2]] - s.vertices[tri[0]]);
    require(norm(n) > 1e-12 * scale * scale, "degenerate_face",
            "face " + std::to_string(f) + " has (near-)zero area");
  }
  for (int v = 0; v < nv; ++v)
    require(used[v], "unreferenced_vertex",
            "vertex " + std::to_string(v) + " appears in no face");

  // Gather directed edges; each undirected edge must appear exactly twice,
  // once in each direction.
  struct Half { int face; int dir; };  // dir +1: (a,b) with a<b traversed a->b
  std::map<std::array<int, 2>, std::vector<Half>> halves;
  for (int f = 0; f < nf; ++f) {
    const auto& tri = s.faces[f];
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      int dir = a < b ? +1 : -1;
      std::array<int, 2> key{std::min(a, b), std::max(a, b)};
      halves[key].push_back({f, dir});
    }
  }

  for (const auto& [key, hs] : halves) {
    const std::string ename =
        "{" + std::to_string(key[0]) + "," + std::to_string(key[1]) + "}";
    require(hs.size() == 2, "non_manifold_edge",
            "edge " + ename + " is incident to " + std::to_string(hs.size()) +
                " faces, expected 2");
    require(hs[0].dir != hs[1].dir, "orientation_mismatch",
            "faces " + std::to_string(hs[0].face) + " and " +
                std::to_string(hs[1].face) + " traverse edge " + ename +
                " in the same direction");
    s.edges.push_back(key);
    s.edge_faces.push_back({hs[0].face, hs[1].face});
  }

  for (const auto& [name, idx] : labels)
    require(idx >= 0 && idx < nv, "bad_index", "label '" + name + "' out of range");
  s.labels = std::move(labels);
  return s;
}

void write_obj(const PolyhedralSurface& s, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "io_error", "cannot open '" + path + "' for writing");
  out.precision(17);
  for (const Vec3& v : s.vertices)
    out << "v " << v.x << " " << v.y << " " << v.z << "\n";
  for (const auto& f : s.faces)
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
  require(out.good(), "io_error", "write failed for '" + path + "'");
}

PolyhedralSurface read_obj(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "io_error", "cannot open '" + path + "'");
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      require(static_cast<bool>(ss >> v.x >> v.y >> v.z), "parse_error",
              path + ":" + std::to_string(lineno) + ": bad vertex line");
      vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int k = 0; k < 3; ++k) {
        std::string tok;
        require(static_cast<bool>(ss >> tok), "parse_error",
                path + ":" + std::to_string(lineno) + ": face needs 3 indices");
        // accept "i", "i/t", "i/t/n"
        f[k] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      std::string extra;
      require(!(ss >> extra), "parse_error",
              path + ":" + std::to_string(lineno) + ": only triangles are supported");
      faces.push_back(f);
    }
  }
  return build_surface(std::move(vertices), std::move(faces));
}

std::string surface_to_json(const PolyhedralSurface& s) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const Vec3& v : s.vertices) j["vertices"].push_back({v.x, v.y, v.z});
  j["faces"] = nlohmann::json::array();
  for (const auto& f : s.faces) j["faces"].push_back({f[0], f[1], f[2]});
  j["labels"] = nlohmann::json::object();
  for (const auto& [name, idx] : s.labels) j["labels"][name] = idx;
  return j.dump(2);
}

PolyhedralSurface surface_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail("parse_error", std::string("invalid JSON: ") + e.what());
  }
  require(j.contains("vertices") && j.contains("faces"), "parse_error",
          "mesh JSON needs 'vertices' and 'faces'");
  std::vector<Vec3> vertices;
  for (const auto& row : j["vertices"]) {
    require(row.is_array() && row.size() == 3, "parse_error", "vertex rows must be [x,y,z]");
    vertices.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
  }
  std::vector<std::array<int, 3>> faces;
  for (const auto& row : j["faces"]) {
    require(row.is_array() && row.size() == 3, "parse_error", "face rows must be [i,j,k]");
    faces.push_back({row[0].get<int>(), row[1].get<int>(), row[2].get<int>()});
  }
  std::map<std::string, int> labels;
  if (j.contains("labels"))
    for (auto it = j["labels"].begin(); it != j["labels"].end(); ++it)
      labels[it.key()] = it.value().get<int>();
  return build_surface(std::move(vertices), std::move(faces), std::move(labels));
}

void write_surface_json(const PolyhedralSurface& s, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "io_error", "cannot open '" + path + "' for writing");
  out << surface_to_json(s) << "\n";
  require(out.good(), "io_error", "write failed for '" + path + "'");
}

PolyhedralSurface read_surface_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "io_error", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return surface_from_json(ss.str());
}

}  // namespace bellows
