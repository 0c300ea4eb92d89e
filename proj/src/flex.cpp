#include "bellows/flex.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "bellows/error.hpp"
#include "bellows/invariants.hpp"
#include "bellows/linalg.hpp"
#include "bellows/octahedron.hpp"

namespace bellows {

namespace {

constexpr double kPi = 3.14159265358979323846;

// reduce to (-pi, pi]
double wrap_pm(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void validate_gauge(const PolyhedralSurface& s, const GaugeFrame& g) {
  const int n = static_cast<int>(s.vertices.size());
  require(g.pinned >= 0 && g.pinned < n && g.axis >= 0 && g.axis < n &&
              g.plane >= 0 && g.plane < n,
          "invalid_params", "gauge vertex out of range");
  require(g.pinned != g.axis && g.pinned != g.plane && g.axis != g.plane,
          "invalid_params", "gauge vertices must be distinct");
  require(g.axis_frozen[0] >= 0 && g.axis_frozen[0] < 3 &&
              g.axis_frozen[1] >= 0 && g.axis_frozen[1] < 3 &&
              g.axis_frozen[0] != g.axis_frozen[1] && g.plane_frozen >= 0 &&
              g.plane_frozen < 3,
          "invalid_params", "gauge coordinate axes out of range");
}

// flat coordinate index <-> free column maps
struct FreeMap {
  std::vector<int> col_of;   // 3n entries, -1 when frozen
  std::vector<int> flat_of;  // free column -> flat coordinate index
};

FreeMap make_free_map(int nverts, const GaugeFrame& g) {
  FreeMap fm;
  fm.col_of.assign(static_cast<size_t>(3 * nverts), 0);
  for (int ix : g.coords()) fm.col_of[static_cast<size_t>(ix)] = -1;
  for (int i = 0; i < 3 * nverts; ++i)
    if (fm.col_of[static_cast<size_t>(i)] == 0) {
      fm.col_of[static_cast<size_t>(i)] = static_cast<int>(fm.flat_of.size());
      fm.flat_of.push_back(i);
    }
  return fm;
}

double get_coord(const PolyhedralSurface& s, int flat) {
  return s.vertices[static_cast<size_t>(flat / 3)][flat % 3];
}

void add_coord(PolyhedralSurface& s, int flat, double d) {
  s.vertices[static_cast<size_t>(flat / 3)][flat % 3] += d;
}

// rows: edges, entries d(len^2)/dx on the free coordinates
Mat<double> length_jacobian(const PolyhedralSurface& s, const FreeMap& fm) {
  Mat<double> J(static_cast<int>(s.edges.size()),
                static_cast<int>(fm.flat_of.size()));
  for (int e = 0; e < J.rows; ++e) {
    const auto& ed = s.edges[static_cast<size_t>(e)];
    Vec3 d = s.vertices[static_cast<size_t>(ed[0])] -
             s.vertices[static_cast<size_t>(ed[1])];
    for (int c = 0; c < 3; ++c) {
      int ca = fm.col_of[static_cast<size_t>(3 * ed[0] + c)];
      int cb = fm.col_of[static_cast<size_t>(3 * ed[1] + c)];
      if (ca >= 0) J(e, ca) += 2.0 * d[c];
      if (cb >= 0) J(e, cb) -= 2.0 * d[c];
    }
  }
  return J;
}

// signed driving defect; wraps dihedral differences to (-pi, pi]
double driving_defect(const PolyhedralSurface& s, const DrivingCoord& d,
                      double target) {
  double v = driving_value(s, d);
  if (d.kind == DrivingCoord::Kind::dihedral) return wrap_pm(v - target);
  return v - target;
}

// vertices whose coordinates influence the dihedral at `e`
std::vector<int> dihedral_support(const PolyhedralSurface& s, int e) {
  std::vector<int> verts{s.edges[static_cast<size_t>(e)][0],
                         s.edges[static_cast<size_t>(e)][1]};
  for (int f : s.edge_faces[static_cast<size_t>(e)])
    for (int v : s.faces[static_cast<size_t>(f)])
      if (std::find(verts.begin(), verts.end(), v) == verts.end())
        verts.push_back(v);
  return verts;
}

// driving row of the corrector system (gradient on free coordinates)
std::vector<double> driving_row(const PolyhedralSurface& s,
                                const DrivingCoord& d, const FreeMap& fm,
                                double diam) {
  std::vector<double> row(fm.flat_of.size(), 0.0);
  if (d.kind == DrivingCoord::Kind::vertex_height) {
    int col = fm.col_of[static_cast<size_t>(3 * d.index + 2)];
    require(col >= 0, "invalid_params",
            "driving height is frozen by the gauge");
    row[static_cast<size_t>(col)] = 1.0;
    return row;
  }
  const double h = 1e-7 * std::max(1.0, diam);
  PolyhedralSurface work = s;
  for (int v : dihedral_support(s, d.index))
    for (int c = 0; c < 3; ++c) {
      int col = fm.col_of[static_cast<size_t>(3 * v + c)];
      if (col < 0) continue;
      add_coord(work, 3 * v + c, h);
      double ap = dihedral_value(work, d.index);
      add_coord(work, 3 * v + c, -2.0 * h);
      double am = dihedral_value(work, d.index);
      add_coord(work, 3 * v + c, h);
      row[static_cast<size_t>(col)] = wrap_pm(ap - am) / (2.0 * h);
    }
  return row;
}

// ascending singular values of the free-coordinate length Jacobian
std::vector<double> spectrum_at(const PolyhedralSurface& s, const FreeMap& fm) {
  return singular_values(length_jacobian(s, fm));
}

void check_regular(const PolyhedralSurface& s, const FreeMap& fm) {
  auto sv = spectrum_at(s, fm);
  double smax = sv.empty() ? 0.0 : sv.back();
  require(smax > 0.0, "singular_jacobian", "length Jacobian vanished");
  // the spectrum comes from the normal matrix, so sqrt(eps)*smax is the
  // resolution floor; 1e-6 sits safely above it
  int soft = 0;
  for (double x : sv)
    if (x < 1e-6 * smax) ++soft;
  require(soft == 1, "singular_jacobian",
          "sample has " + std::to_string(soft) +
              " soft directions where a regular flex point has 1");
}

// Newton correction onto the length variety with no driving row, used to
// validate kickoff directions. Underdetermined, so the basic least-squares
// solution picks the step.
PolyhedralSurface correct_lengths(PolyhedralSurface work,
                                  const std::vector<double>& ref_len2,
                                  const FreeMap& fm, const StepOptions& opt) {
  const double diam = work.diameter();
  const double cap = opt.max_motion_rel * std::max(1.0, diam);
  PolyhedralSurface entry = work;
  for (int it = 0; it < opt.max_iterations; ++it) {
    auto r = constraint_residual(work, ref_len2);
    if (max_abs(r) <= opt.tolerance) return work;
    Mat<double> J = length_jacobian(work, fm);
    for (double& x : r) x = -x;
    auto delta = qr_least_squares(J, r, 1e-9);
    for (size_t k = 0; k < delta.size(); ++k) {
      require(std::isfinite(delta[k]), "no_convergence",
              "corrector produced a non-finite step");
      add_coord(work, fm.flat_of[k], delta[k]);
    }
    double moved = 0.0;
    for (size_t v = 0; v < work.vertices.size(); ++v)
      moved = std::max(moved, dist(work.vertices[v], entry.vertices[v]));
    require(moved <= cap, "no_convergence",
            "correction exceeded the motion cap");
  }
  fail("no_convergence", "length correction did not converge");
}

// predictor x + h w + (h^2/2) u and correction back onto the variety
PolyhedralSurface launch_predict(const PolyhedralSurface& flat,
                                 const std::vector<Vec3>& w, double h,
                                 const std::vector<double>& ref_len2,
                                 const FreeMap& fm, const StepOptions& opt) {
  // second-order in-plane correction u: J u = -2 |dw|^2 per edge
  Mat<double> J = length_jacobian(flat, fm);
  std::vector<double> rhs(flat.edges.size());
  for (size_t e = 0; e < flat.edges.size(); ++e) {
    const auto& ed = flat.edges[e];
    Vec3 dw = w[static_cast<size_t>(ed[0])] - w[static_cast<size_t>(ed[1])];
    rhs[e] = -2.0 * norm2(dw);
  }
  auto u = qr_least_squares(J, rhs, 1e-9);
  PolyhedralSurface work = flat;
  for (size_t v = 0; v < work.vertices.size(); ++v)
    work.vertices[v] += h * w[v];
  for (size_t k = 0; k < u.size(); ++k)
    add_coord(work, fm.flat_of[k], 0.5 * h * h * u[k]);
  return correct_lengths(std::move(work), ref_len2, fm, opt);
}

}  // namespace

std::array<int, 6> GaugeFrame::coords() const {
  return {3 * pinned, 3 * pinned + 1, 3 * pinned + 2,
          3 * axis + axis_frozen[0], 3 * axis + axis_frozen[1],
          3 * plane + plane_frozen};
}

GaugeFrame make_gauge(const PolyhedralSurface& s, int pinned, int axis,
                      int plane) {
  const int n = static_cast<int>(s.vertices.size());
  require(pinned >= 0 && pinned < n && axis >= 0 && axis < n && plane >= 0 &&
              plane < n,
          "invalid_params", "gauge vertex out of range");
  require(pinned != axis && pinned != plane && axis != plane, "invalid_params",
          "gauge vertices must be distinct");
  const double scale = std::max(1.0, s.diameter());
  Vec3 r = s.vertices[static_cast<size_t>(axis)] -
           s.vertices[static_cast<size_t>(pinned)];
  require(norm(r) > 1e-9 * scale, "invalid_params",
          "pinned and axis vertices coincide");
  int dom = 0;
  for (int c = 1; c < 3; ++c)
    if (std::abs(r[c]) > std::abs(r[dom])) dom = c;
  GaugeFrame g;
  g.pinned = pinned;
  g.axis = axis;
  g.plane = plane;
  int k = 0;
  for (int c = 0; c < 3; ++c)
    if (c != dom) g.axis_frozen[static_cast<size_t>(k++)] = c;
  Vec3 q = s.vertices[static_cast<size_t>(plane)] -
           s.vertices[static_cast<size_t>(pinned)];
  Vec3 w = cross(normalized(r), q);
  require(norm(w) > 1e-9 * scale, "invalid_params",
          "plane vertex lies on the pin axis");
  g.plane_frozen = 0;
  for (int c = 1; c < 3; ++c)
    if (std::abs(w[c]) > std::abs(w[g.plane_frozen])) g.plane_frozen = c;
  auto ix = g.coords();
  for (size_t i = 0; i < ix.size(); ++i) g.values[i] = get_coord(s, ix[i]);
  return g;
}

GaugeFrame octahedron_gauge(const PolyhedralSurface& s) {
  OctahedronLabels lab = labels_from_surface(s);
  return make_gauge(s, lab.a1, lab.b1, lab.c1);
}

double driving_value(const PolyhedralSurface& s, const DrivingCoord& d) {
  if (d.kind == DrivingCoord::Kind::dihedral) return dihedral_value(s, d.index);
  require(d.index >= 0 && d.index < static_cast<int>(s.vertices.size()),
          "bad_index", "driving vertex out of range");
  return s.vertices[static_cast<size_t>(d.index)].z;
}

std::vector<double> squared_lengths(const PolyhedralSurface& s) {
  std::vector<double> out(s.edges.size());
  for (size_t e = 0; e < s.edges.size(); ++e)
    out[e] = norm2(s.vertices[static_cast<size_t>(s.edges[e][0])] -
                   s.vertices[static_cast<size_t>(s.edges[e][1])]);
  return out;
}

std::vector<double> constraint_residual(const PolyhedralSurface& s,
                                        const std::vector<double>& ref_len2) {
  require(ref_len2.size() == s.edges.size(), "combinatorics_mismatch",
          "reference lengths do not match the edge count");
  auto cur = squared_lengths(s);
  for (size_t e = 0; e < cur.size(); ++e) cur[e] -= ref_len2[e];
  return cur;
}

std::vector<double> constraint_spectrum(const PolyhedralSurface& s,
                                        const GaugeFrame& g) {
  validate_gauge(s, g);
  return spectrum_at(s, make_free_map(static_cast<int>(s.vertices.size()), g));
}

PolyhedralSurface flex_step(const PolyhedralSurface& cur,
                            const std::vector<double>& ref_len2,
                            const GaugeFrame& g, const DrivingCoord& d,
                            double target, const StepOptions& opt) {
  require(ref_len2.size() == cur.edges.size(), "combinatorics_mismatch",
          "reference lengths do not match the edge count");
  validate_gauge(cur, g);
  const FreeMap fm =
      make_free_map(static_cast<int>(cur.vertices.size()), g);
  const double diam = cur.diameter();

  {
    auto r0 = constraint_residual(cur, ref_len2);
    if (max_abs(r0) <= opt.tolerance &&
        std::abs(driving_defect(cur, d, target)) <= opt.tolerance)
      return cur;
  }

  PolyhedralSurface work = cur;
  {
    auto ix = g.coords();
    for (size_t i = 0; i < ix.size(); ++i) {
      require(std::abs(get_coord(work, ix[i]) - g.values[i]) <=
                  1e-9 * std::max(1.0, diam),
              "invalid_params", "surface does not sit at the gauge values");
      work.vertices[static_cast<size_t>(ix[i] / 3)][ix[i] % 3] = g.values[i];
    }
  }

  const double cap = opt.max_motion_rel * std::max(1.0, diam);
  const double wrow = std::max(1.0, diam * diam);  // balances the driving row
  const int nfree = static_cast<int>(fm.flat_of.size());
  bool done = false;
  for (int it = 0; it < opt.max_iterations && !done; ++it) {
    auto r = constraint_residual(work, ref_len2);
    double dd = driving_defect(work, d, target);
    if (max_abs(r) <= opt.tolerance && std::abs(dd) <= opt.tolerance) {
      done = true;
      break;
    }
    Mat<double> A(static_cast<int>(r.size()) + 1, nfree);
    std::vector<double> b(r.size() + 1);
    {
      Mat<double> J = length_jacobian(work, fm);
      for (int i = 0; i < J.rows; ++i)
        for (int j = 0; j < J.cols; ++j) A(i, j) = J(i, j);
      for (size_t i = 0; i < r.size(); ++i) b[i] = -r[i];
      auto row = driving_row(work, d, fm, diam);
      for (int j = 0; j < nfree; ++j) A(A.rows - 1, j) = wrow * row[static_cast<size_t>(j)];
      b[r.size()] = -wrow * dd;
    }
    auto delta = qr_least_squares(A, b);
    for (size_t k = 0; k < delta.size(); ++k) {
      require(std::isfinite(delta[k]), "no_convergence",
              "corrector produced a non-finite step");
      add_coord(work, fm.flat_of[k], delta[k]);
    }
    double moved = 0.0;
    for (size_t v = 0; v < work.vertices.size(); ++v)
      moved = std::max(moved, dist(work.vertices[v], cur.vertices[v]));
    require(moved <= cap, "no_convergence",
            "step displacement exceeded the motion cap");
  }
  require(done, "no_convergence", "corrector did not converge");
  check_regular(work, fm);
  return work;
}

PolyhedralSurface FlexPath::at(int k) const {
  require(k >= 0 && k < static_cast<int>(samples.size()), "bad_index",
          "sample index out of range");
  PolyhedralSurface s = base;
  s.vertices = samples[static_cast<size_t>(k)];
  return s;
}

std::vector<PolyhedralSurface> FlexPath::surfaces() const {
  std::vector<PolyhedralSurface> out;
  out.reserve(samples.size());
  for (int k = 0; k < static_cast<int>(samples.size()); ++k)
    out.push_back(at(k));
  return out;
}

FlexPath trace_flex(const PolyhedralSurface& start, const GaugeFrame& g,
                    const DrivingCoord& d, double t_lo, double t_hi, int n,
                    const StepOptions& opt) {
  require(n >= 1, "invalid_params", "need at least one sample");
  validate_gauge(start, g);
  auto ref = squared_lengths(start);
  require(max_abs(constraint_residual(start, ref)) < 1e-10, "invalid_params",
          "start surface violates its own edge lengths");
  {
    double d0 = driving_defect(start, d, t_lo);
    double scale = d.kind == DrivingCoord::Kind::dihedral
                       ? 1.0
                       : std::max(1.0, start.diameter());
    require(std::abs(d0) <= 1e-6 * scale, "invalid_params",
            "start surface is not at the range start");
  }

  FlexPath path;
  path.base = start;
  path.gauge = g;
  path.driving = d;
  path.t.push_back(t_lo);
  path.samples.push_back(start.vertices);
  path.residual.push_back(max_abs(constraint_residual(start, ref)));
  if (n == 1 || t_lo == t_hi) return path;

  const double range = t_hi - t_lo;
  const double floor_step = 1e-6 * std::abs(range);
  PolyhedralSurface cur = start;
  double t_cur = t_lo;
  for (int k = 1; k < n; ++k) {
    const double t_goal = (k == n - 1)
                              ? t_hi
                              : t_lo + range * static_cast<double>(k) /
                                           static_cast<double>(n - 1);
    while (t_cur != t_goal) {
      double t_try = t_goal;
      for (;;) {
        try {
          cur = flex_step(cur, ref, g, d, t_try, opt);
          break;
        } catch (const Error& e) {
          if (e.code() != "no_convergence") throw;
          t_try = t_cur + 0.5 * (t_try - t_cur);
          require(std::abs(t_try - t_cur) >= floor_step, "no_convergence",
                  "substeps shrank below 1e-6 of the range near t = " +
                      std::to_string(t_cur));
        }
      }
      t_cur = t_try;
    }
    path.t.push_back(t_goal);
    path.samples.push_back(cur.vertices);
    path.residual.push_back(max_abs(constraint_residual(cur, ref)));
  }
  return path;
}

std::vector<Vec3> flex_kickoff(const PolyhedralSurface& flat,
                               const GaugeFrame& g) {
  validate_gauge(flat, g);
  const int n = static_cast<int>(flat.vertices.size());
  const double diam = flat.diameter();
  {
    double z0 = 0.0;
    for (const Vec3& v : flat.vertices) z0 += v.z;
    z0 /= static_cast<double>(n);
    double dev = 0.0;
    for (const Vec3& v : flat.vertices) dev = std::max(dev, std::abs(v.z - z0));
    require(dev <= 1e-9 * std::max(1.0, diam), "invalid_params",
            "flat position must lie in a z = const plane");
  }
  const FreeMap fm = make_free_map(n, g);
  const int nfree = static_cast<int>(fm.flat_of.size());

  std::vector<int> zcols;                    // free columns that are z coords
  std::vector<int> zcol_of(static_cast<size_t>(n), -1);
  std::vector<int> xycols;
  for (int k = 0; k < nfree; ++k) {
    int flat_ix = fm.flat_of[static_cast<size_t>(k)];
    if (flat_ix % 3 == 2) {
      zcol_of[static_cast<size_t>(flat_ix / 3)] = static_cast<int>(zcols.size());
      zcols.push_back(k);
    } else {
      xycols.push_back(k);
    }
  }
  const int nz = static_cast<int>(zcols.size());
  require(nz >= 1, "kernel_dimension_unexpected",
          "the gauge froze every vertical coordinate");

  // at a flat position the out-of-plane directions are exactly the kernel
  Mat<double> J = length_jacobian(flat, fm);
  Mat<double> K = kernel_basis(J, 1e-9);
  require(K.cols == nz, "kernel_dimension_unexpected",
          "kernel dimension " + std::to_string(K.cols) + " (expected " +
              std::to_string(nz) + " vertical directions)");

  // planar self-stresses obstruct second-order motion
  Mat<double> R(J.rows, static_cast<int>(xycols.size()));
  for (int i = 0; i < J.rows; ++i)
    for (size_t j = 0; j < xycols.size(); ++j)
      R(i, static_cast<int>(j)) = J(i, xycols[j]);
  Mat<double> S = kernel_basis(transpose(R), 1e-9);
  const int ns = S.cols;
  require(ns >= 1, "kernel_dimension_unexpected",
          "flat position carries no planar self-stress");
  require(ns + 1 >= nz, "kernel_dimension_unexpected",
          "stress count cannot pin a vertical direction");

  // stress quadrics: sum_e w_e (dz_i - dz_j)^2 on the free vertical space
  std::vector<Mat<double>> quad(static_cast<size_t>(ns), Mat<double>(nz, nz));
  for (int s = 0; s < ns; ++s)
    for (int e = 0; e < J.rows; ++e) {
      double w = S(e, s);
      if (w == 0.0) continue;
      const auto& ed = flat.edges[static_cast<size_t>(e)];
      int a = zcol_of[static_cast<size_t>(ed[0])];
      int b = zcol_of[static_cast<size_t>(ed[1])];
      Mat<double>& Q = quad[static_cast<size_t>(s)];
      if (a >= 0) Q(a, a) += w;
      if (b >= 0) Q(b, b) += w;
      if (a >= 0 && b >= 0) {
        Q(a, b) -= w;
        Q(b, a) -= w;
      }
    }

  // common zeros of the quadrics on the unit sphere, by multistart Newton
  auto eval = [&](const std::vector<double>& w, std::vector<double>& F) {
    F.assign(static_cast<size_t>(ns) + 1, 0.0);
    for (int s = 0; s < ns; ++s) {
      double acc = 0.0;
      for (int i = 0; i < nz; ++i)
        for (int j = 0; j < nz; ++j)
          acc += w[static_cast<size_t>(i)] * quad[static_cast<size_t>(s)](i, j) *
                 w[static_cast<size_t>(j)];
      F[static_cast<size_t>(s)] = acc;
    }
    double nrm2 = 0.0;
    for (double x : w) nrm2 += x * x;
    F[static_cast<size_t>(ns)] = nrm2 - 1.0;
  };
  std::vector<std::vector<double>> lines;
  const int nstarts = 64;
  for (int s0 = 0; s0 < nstarts; ++s0) {
    std::vector<double> w(static_cast<size_t>(nz), 0.0);
    // low-discrepancy directions; exact for nz == 3, generic otherwise
    double u = (static_cast<double>(s0) + 0.5) / nstarts;
    double phi = 2.0 * kPi * std::fmod(0.6180339887498949 * s0, 1.0);
    if (nz >= 3) {
      double ct = 2.0 * u - 1.0;
      double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      w[0] = st * std::cos(phi);
      w[1] = st * std::sin(phi);
      w[2] = ct;
      for (int i = 3; i < nz; ++i)
        w[static_cast<size_t>(i)] = std::cos(phi * (i + 1));
    } else {
      w[0] = std::cos(phi);
      if (nz == 2) w[1] = std::sin(phi);
    }
    double nrm = 0.0;
    for (double x : w) nrm += x * x;
    for (double& x : w) x /= std::sqrt(nrm);

    std::vector<double> F;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      eval(w, F);
      if (max_abs(F) < 1e-12) {
        ok = true;
        break;
      }
      Mat<double> JF(ns + 1, nz);
      for (int s = 0; s < ns; ++s)
        for (int i = 0; i < nz; ++i) {
          double acc = 0.0;
          for (int j = 0; j < nz; ++j)
            acc += quad[static_cast<size_t>(s)](i, j) * w[static_cast<size_t>(j)];
          JF(s, i) = 2.0 * acc;
        }
      for (int i = 0; i < nz; ++i) JF(ns, i) = 2.0 * w[static_cast<size_t>(i)];
      for (double& x : F) x = -x;
      auto delta = qr_least_squares(JF, F, 1e-12);
      double wn = 0.0;
      for (int i = 0; i < nz; ++i) {
        w[static_cast<size_t>(i)] += delta[static_cast<size_t>(i)];
        wn += w[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
      }
      if (!std::isfinite(wn) || wn > 100.0) break;
    }
    if (!ok) continue;
    bool dup = false;
    for (const auto& l : lines) {
      double dp = 0.0;
      for (int i = 0; i < nz; ++i) dp += l[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
      if (std::abs(dp) > 1.0 - 1e-6) {
        dup = true;
        break;
      }
    }
    if (!dup) lines.push_back(w);
  }
  require(!lines.empty(), "no_convergence",
          "no vertical direction satisfies every stress quadric");

  OctahedronLabels lab = labels_from_surface(flat);
  auto ref = squared_lengths(flat);
  const double h = 1e-2 * std::max(1.0, diam);
  double rmin = diam;
  for (size_t e = 0; e < flat.edges.size(); ++e)
    if (flat.edges[e][0] == lab.a1 || flat.edges[e][1] == lab.a1)
      rmin = std::min(rmin, dist(flat.vertices[static_cast<size_t>(flat.edges[e][0])],
                                 flat.vertices[static_cast<size_t>(flat.edges[e][1])]));

  bool launched_any = false;
  for (const auto& l : lines) {
    std::vector<Vec3> w(flat.vertices.size(), Vec3{0.0, 0.0, 0.0});
    for (int v = 0; v < n; ++v)
      if (zcol_of[static_cast<size_t>(v)] >= 0)
        w[static_cast<size_t>(v)].z = l[static_cast<size_t>(zcol_of[static_cast<size_t>(v)])];
    PolyhedralSurface probe;
    try {
      probe = launch_predict(flat, w, h, ref, fm, {});
    } catch (const Error&) {
      continue;
    }
    launched_any = true;
    LinkShape shape =
        link_convexity(vertex_link(probe, lab.a1, 0.4 * rmin));
    if (shape != LinkShape::self_intersecting) continue;
    // canonical sign: the labeled C1 apex rises (first moving vertex if C1
    // happens to be gauge-frozen)
    double key = w[static_cast<size_t>(lab.c1)].z;
    if (std::abs(key) <= 1e-9) {
      for (const Vec3& wv : w)
        if (std::abs(wv.z) > 1e-9) {
          key = wv.z;
          break;
        }
    }
    if (key < 0.0)
      for (Vec3& wv : w) wv.z = -wv.z;
    return w;
  }
  require(launched_any, "no_convergence",
          "kickoff candidates do not integrate to the length variety");
  fail("wrong_branch", "no orientation makes the link at A1 self-intersecting");
}

PolyhedralSurface flex_launch(const PolyhedralSurface& flat,
                              const GaugeFrame& g, const DrivingCoord& d,
                              double target, const StepOptions& opt) {
  require(d.kind == DrivingCoord::Kind::vertex_height, "invalid_params",
          "launching from flat needs a vertex-height chart");
  require(d.index >= 0 && d.index < static_cast<int>(flat.vertices.size()),
          "bad_index", "driving vertex out of range");
  auto w = flex_kickoff(flat, g);
  double comp = w[static_cast<size_t>(d.index)].z;
  require(std::abs(comp) > 1e-9, "invalid_params",
          "driving vertex does not leave the plane");
  double dz = target - flat.vertices[static_cast<size_t>(d.index)].z;
  if (dz == 0.0) return flat;
  const FreeMap fm = make_free_map(static_cast<int>(flat.vertices.size()), g);
  auto ref = squared_lengths(flat);
  PolyhedralSurface probe = launch_predict(flat, w, dz / comp, ref, fm, opt);
  return flex_step(probe, ref, g, d, target, opt);
}

void write_flex_csv(const FlexPath& path, std::ostream& out) {
  out << "t";
  for (size_t v = 0; v < path.base.vertices.size(); ++v)
    out << ",v" << v << "_x,v" << v << "_y,v" << v << "_z";
  out << ",residual\n";
  out << std::setprecision(17);
  for (size_t k = 0; k < path.samples.size(); ++k) {
    out << path.t[k];
    for (const Vec3& p : path.samples[k])
      out << "," << p.x << "," << p.y << "," << p.z;
    out << "," << path.residual[k] << "\n";
  }
}

void write_flex_csv(const FlexPath& path, const std::string& filename) {
  std::ofstream out(filename);
  require(out.good(), "io_error", "cannot open '" + filename + "' for writing");
  write_flex_csv(path, out);
  require(out.good(), "io_error", "write failed for '" + filename + "'");
}

void write_flex_json(const FlexPath& path, const std::string& filename) {
  nlohmann::json j;
  j["surface"] = nlohmann::json::parse(surface_to_json(path.base));
  j["gauge"] = {{"pinned", path.gauge.pinned},
                {"axis", path.gauge.axis},
                {"plane", path.gauge.plane},
                {"axis_frozen", {path.gauge.axis_frozen[0], path.gauge.axis_frozen[1]}},
                {"plane_frozen", path.gauge.plane_frozen},
                {"values", path.gauge.values}};
  j["driving"] = {{"kind", path.driving.kind == DrivingCoord::Kind::dihedral
                               ? "dihedral"
                               : "vertex_height"},
                  {"index", path.driving.index}};
  j["t"] = path.t;
  j["samples"] = nlohmann::json::array();
  for (const auto& sample : path.samples) {
    nlohmann::json rows = nlohmann::json::array();
    for (const Vec3& p : sample) rows.push_back({p.x, p.y, p.z});
    j["samples"].push_back(rows);
  }
  j["residual"] = path.residual;
  std::ofstream out(filename);
  require(out.good(), "io_error", "cannot open '" + filename + "' for writing");
  out << j.dump(2) << "\n";
  require(out.good(), "io_error", "write failed for '" + filename + "'");
}

FlexPath read_flex_json(const std::string& filename) {
  std::ifstream in(filename);
  require(in.good(), "io_error", "cannot open '" + filename + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const std::exception& e) {
    fail("parse_error", std::string("invalid JSON: ") + e.what());
  }
  require(j.contains("surface") && j.contains("t") && j.contains("samples") &&
              j.contains("residual") && j.contains("gauge") &&
              j.contains("driving"),
          "parse_error", "flex JSON is missing a top-level field");
  FlexPath path;
  path.base = surface_from_json(j["surface"].dump());
  const auto& jg = j["gauge"];
  path.gauge.pinned = jg["pinned"].get<int>();
  path.gauge.axis = jg["axis"].get<int>();
  path.gauge.plane = jg["plane"].get<int>();
  path.gauge.axis_frozen = {jg["axis_frozen"][0].get<int>(),
                            jg["axis_frozen"][1].get<int>()};
  path.gauge.plane_frozen = jg["plane_frozen"].get<int>();
  for (size_t i = 0; i < 6; ++i)
    path.gauge.values[i] = jg["values"][i].get<double>();
  std::string kind = j["driving"]["kind"].get<std::string>();
  require(kind == "dihedral" || kind == "vertex_height", "parse_error",
          "unknown driving kind '" + kind + "'");
  path.driving.kind = kind == "dihedral" ? DrivingCoord::Kind::dihedral
                                         : DrivingCoord::Kind::vertex_height;
  path.driving.index = j["driving"]["index"].get<int>();
  path.t = j["t"].get<std::vector<double>>();
  for (const auto& rows : j["samples"]) {
    std::vector<Vec3> sample;
    for (const auto& row : rows) {
      require(row.is_array() && row.size() == 3, "parse_error",
              "sample rows must be [x,y,z]");
      sample.push_back({row[0].get<double>(), row[1].get<double>(),
                        row[2].get<double>()});
    }
    path.samples.push_back(std::move(sample));
  }
  path.residual = j["residual"].get<std::vector<double>>();
  require(path.t.size() == path.samples.size() &&
              path.t.size() == path.residual.size(),
          "parse_error", "sample, t and residual counts disagree");
  for (const auto& sample : path.samples)
    require(sample.size() == path.base.vertices.size(), "parse_error",
            "sample vertex count does not match the surface");
  return path;
}

}  // namespace bellows
