#include "bellows/relations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "bellows/error.hpp"
#include "bellows/linalg.hpp"
#include "bellows/octahedron.hpp"

namespace bellows {

namespace {

using hp = boost::multiprecision::cpp_bin_float_50;
using hp2 = boost::multiprecision::cpp_bin_float_100;
using bigint = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

const double kPi = std::acos(-1.0);

hp pi_h() {
  static const hp v = atan(hp(1)) * 4;
  return v;
}

hp2 pi_h2() {
  static const hp2 v = atan(hp2(1)) * 4;
  return v;
}

// ---------------------------------------------------------------------------
// Exact integer LLL (delta = 3/4) in the all-integer lambda/d formulation.
// Operates on the rows of `b`; Gram data never leaves integers, so the
// reduction is deterministic and exact at any scale.

bigint floor_div(const bigint& a, const bigint& b) {
  bigint q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

bigint round_div(const bigint& a, const bigint& b) {
  return floor_div(2 * a + b, 2 * b);
}

struct IntLLL {
  int n = 0;
  std::vector<std::vector<bigint>> b;
  std::vector<std::vector<bigint>> lam;  // lam[i][j], j < i
  std::vector<bigint> d;                 // d[i + 1] = det Gram(b_0..b_i), d[0] = 1

  explicit IntLLL(std::vector<std::vector<bigint>> rows) : b(std::move(rows)) {
    n = static_cast<int>(b.size());
    lam.assign(n, {});
    d.assign(n + 1, bigint(1));
    for (int i = 0; i < n; ++i) {
      lam[i].assign(i, bigint(0));
      for (int j = 0; j <= i; ++j) {
        bigint u = 0;
        for (size_t t = 0; t < b[i].size(); ++t) u += b[i][t] * b[j][t];
        for (int r = 0; r < j; ++r) u = (d[r + 1] * u - lam[i][r] * lam[j][r]) / d[r];
        if (j < i) {
          lam[i][j] = u;
        } else {
          require(u > 0, "invalid_params", "dependent rows in relation lattice");
          d[i + 1] = u;
        }
      }
    }
  }

  void red(int k, int l) {
    if (2 * abs(lam[k][l]) <= d[l + 1]) return;
    const bigint q = round_div(lam[k][l], d[l + 1]);
    for (size_t t = 0; t < b[k].size(); ++t) b[k][t] -= q * b[l][t];
    for (int r = 0; r < l; ++r) lam[k][r] -= q * lam[l][r];
    lam[k][l] -= q * d[l + 1];
  }

  void swap_step(int k) {
    std::swap(b[k], b[k - 1]);
    for (int r = 0; r < k - 1; ++r) std::swap(lam[k][r], lam[k - 1][r]);
    const bigint l = lam[k][k - 1];
    const bigint bb = (d[k - 1] * d[k + 1] + l * l) / d[k];
    for (int i = k + 1; i < n; ++i) {
      const bigint t = lam[i][k];
      lam[i][k] = (d[k + 1] * lam[i][k - 1] - l * t) / d[k];
      lam[i][k - 1] = (bb * t + l * lam[i][k]) / d[k + 1];
    }
    d[k] = bb;
  }

  void reduce() {
    int k = 1;
    while (k < n) {
      red(k, k - 1);
      const bigint l = lam[k][k - 1];
      if (4 * (d[k + 1] * d[k - 1] + l * l) < 3 * d[k] * d[k]) {
        swap_step(k);
        k = std::max(k - 1, 1);
      } else {
        for (int r = k - 2; r >= 0; --r) red(k, r);
        ++k;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Relation search driver.  Values come in at 50 digits; candidates from the
// reduced lattice are accepted only when the residual, re-evaluated at 100
// digits, sits inside the noise cone precision * max|x| * sum|c|.

void check_decidable(int n, long long bound, double eps) {
  require(bound >= 1, "invalid_params", "coefficient bound must be positive");
  require(eps > 0, "invalid_params", "precision must be positive");
  const double need = -3.0 - (n - 1) * std::log10(double(bound) + 1.0);
  if (std::log10(eps) > need) {
    fail("precision_exhausted",
         "coefficient bound " + std::to_string(bound) + " over " +
             std::to_string(n) +
             " values is undecidable at the given precision: spurious "
             "combinations reach the noise floor");
  }
}

struct FoundRelation {
  std::vector<long long> coeffs;
  double residual = 0.0;
};

void normalize_coeffs(std::vector<long long>& c) {
  long long g = 0;
  for (long long v : c) g = std::gcd(g, std::abs(v));
  if (g > 1) {
    for (long long& v : c) v /= g;
  }
  for (long long v : c) {
    if (v != 0) {
      if (v < 0) {
        for (long long& w : c) w = -w;
      }
      break;
    }
  }
}

std::optional<FoundRelation> search_relation(const std::vector<hp>& x,
                                             long long bound, double eps) {
  const int n = static_cast<int>(x.size());
  require(n >= 1, "invalid_params", "empty value list");
  check_decidable(n, bound, eps);

  hp m = 0;
  for (const hp& v : x) m = std::max(m, hp(abs(v)));
  if (m == 0) {
    FoundRelation out;
    out.coeffs.assign(n, 0);
    out.coeffs[0] = 1;
    return out;
  }

  const int digits = std::max(1, int(std::lround(-std::log10(eps))));
  bigint scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const hp nf(scale);

  std::vector<std::vector<bigint>> rows(n, std::vector<bigint>(n + 1, bigint(0)));
  for (int i = 0; i < n; ++i) {
    rows[i][i] = 1;
    rows[i][n] = round(nf * x[i] / m).convert_to<bigint>();
  }

  IntLLL lll(std::move(rows));
  lll.reduce();

  std::vector<hp2> xx(n);
  for (int i = 0; i < n; ++i) xx[i] = hp2(x[i]);
  const hp2 m2(m);

  std::optional<FoundRelation> best;
  long long best_sum = 0;
  const bigint big_bound(bound);
  for (int i = 0; i < lll.n; ++i) {
    bool zero = true, in_bound = true;
    for (int j = 0; j < n; ++j) {
      if (lll.b[i][j] != 0) zero = false;
      if (abs(lll.b[i][j]) > big_bound) in_bound = false;
    }
    if (zero || !in_bound) continue;
    std::vector<long long> c(n);
    long long sum_abs = 0;
    for (int j = 0; j < n; ++j) {
      c[j] = lll.b[i][j].convert_to<long long>();
      sum_abs += std::abs(c[j]);
    }
    hp2 s = 0;
    for (int j = 0; j < n; ++j) s += hp2(c[j]) * xx[j];
    const hp2 thr = hp2(eps) * m2 * hp2(sum_abs);
    if (abs(s) > thr) continue;
    normalize_coeffs(c);
    long long norm_sum = 0;
    for (long long v : c) norm_sum += std::abs(v);
    hp2 sn = 0;
    for (int j = 0; j < n; ++j) sn += hp2(c[j]) * xx[j];
    FoundRelation cand{std::move(c), abs(sn).convert_to<double>()};
    if (!best || norm_sum < best_sum ||
        (norm_sum == best_sum && cand.coeffs < best->coeffs)) {
      best = std::move(cand);
      best_sum = norm_sum;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Exact rational RREF, used to reduce certificates to an independent set, to
// decompose the value span, and to solve functional assignments.

struct RatRREF {
  int cols = 0;
  std::vector<std::vector<Rat>> rows;  // each normalized to leading 1
  std::vector<int> pivots;             // pivot column per row, ascending

  explicit RatRREF(int c) : cols(c) {}

  void reduce_against(std::vector<Rat>& r) const {
    for (size_t j = 0; j < rows.size(); ++j) {
      const Rat f = r[pivots[j]];
      if (f == 0) continue;
      for (int t = 0; t < cols; ++t) r[t] -= f * rows[j][t];
    }
  }

  bool in_span(std::vector<Rat> r) const {
    reduce_against(r);
    return std::all_of(r.begin(), r.end(), [](const Rat& v) { return v == 0; });
  }

  bool add_row(std::vector<Rat> r) {
    reduce_against(r);
    int lead = -1;
    for (int t = 0; t < cols; ++t) {
      if (r[t] != 0) {
        lead = t;
        break;
      }
    }
    if (lead < 0) return false;
    const Rat inv = r[lead];
    for (int t = 0; t < cols; ++t) r[t] /= inv;
    for (size_t j = 0; j < rows.size(); ++j) {
      const Rat f = rows[j][lead];
      if (f == 0) continue;
      for (int t = 0; t < cols; ++t) rows[j][t] -= f * r[t];
    }
    size_t at = 0;
    while (at < pivots.size() && pivots[at] < lead) ++at;
    rows.insert(rows.begin() + at, std::move(r));
    pivots.insert(pivots.begin() + at, lead);
    return true;
  }

  std::vector<int> free_cols() const {
    std::vector<int> out;
    size_t j = 0;
    for (int t = 0; t < cols; ++t) {
      if (j < pivots.size() && pivots[j] == t) {
        ++j;
      } else {
        out.push_back(t);
      }
    }
    return out;
  }
};

std::vector<Rat> rat_row(const std::vector<long long>& c) {
  std::vector<Rat> r(c.size());
  for (size_t i = 0; i < c.size(); ++i) r[i] = Rat(c[i]);
  return r;
}

// Length-weighted sums over the free non-pi directions of a relation span:
// with every pivot value rewritten over the free ones, the Dehn tensor
// component along free column f is sum_i len_i Q_{i,f}.  The pi column is
// excluded; it never holds a pivot because every certificate touches at
// least one angle column to its left.
std::vector<double> weighted_free_sums(const RatRREF& rref,
                                       const std::vector<double>& lengths,
                                       int pi_col) {
  std::vector<double> out;
  for (int f : rref.free_cols()) {
    if (f == pi_col) continue;
    double w = f < int(lengths.size()) ? lengths[f] : 0.0;
    for (size_t j = 0; j < rref.rows.size(); ++j) {
      const int p = rref.pivots[j];
      require(p != pi_col, "invalid_params", "pure pi relation in span");
      if (p >= int(lengths.size())) continue;
      w -= lengths[p] * rref.rows[j][f].convert_to<double>();
    }
    out.push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// High-precision sample polishing.  Gauge freedoms are pinned to the double
// coordinates; one further coordinate per flex direction is pinned so Newton
// cannot slide along the flex; the remaining coordinates converge
// quadratically onto the length variety.

std::vector<double> surface_squared_lengths(const PolyhedralSurface& s) {
  std::vector<double> out(s.edges.size());
  for (size_t e = 0; e < s.edges.size(); ++e) {
    out[e] = norm2(s.vertices[s.edges[e][0]] - s.vertices[s.edges[e][1]]);
  }
  return out;
}

std::vector<Vec3T<hp>> polish_vertices(const PolyhedralSurface& s,
                                       const std::vector<double>& ref_len_sq) {
  const int nv = static_cast<int>(s.vertices.size());
  const int ne = static_cast<int>(s.edges.size());
  require(int(ref_len_sq.size()) == ne, "invalid_params",
          "reference length count does not match edge count");
  require(!s.faces.empty(), "invalid_params", "empty surface");

  double scale = 0;
  for (double r : ref_len_sq) scale = std::max(scale, std::abs(r));
  require(scale > 0, "invalid_params", "degenerate reference lengths");

  const auto cur = surface_squared_lengths(s);
  for (int e = 0; e < ne; ++e) {
    require(std::abs(cur[e] - ref_len_sq[e]) <= 1e-8 * scale, "invalid_params",
            "sample is too far from the length variety to polish");
  }

  // Gauge pins from the first face: v0 full, v1 all but its dominant
  // direction component, v2 the dominant normal component.
  std::vector<bool> frozen(3 * nv, false);
  const int v0 = s.faces[0][0], v1 = s.faces[0][1], v2 = s.faces[0][2];
  for (int t = 0; t < 3; ++t) frozen[3 * v0 + t] = true;
  const Vec3 dvec = s.vertices[v1] - s.vertices[v0];
  int dmax = 0;
  for (int t = 1; t < 3; ++t) {
    if (std::abs(dvec[t]) > std::abs(dvec[dmax])) dmax = t;
  }
  for (int t = 0; t < 3; ++t) {
    if (t != dmax) frozen[3 * v1 + t] = true;
  }
  const Vec3 nvec = cross(dvec, s.vertices[v2] - s.vertices[v0]);
  int nmax = 0;
  for (int t = 1; t < 3; ++t) {
    if (std::abs(nvec[t]) > std::abs(nvec[nmax])) nmax = t;
  }
  frozen[3 * v2 + nmax] = true;

  auto free_list = [&]() {
    std::vector<int> out;
    for (int t = 0; t < 3 * nv; ++t) {
      if (!frozen[t]) out.push_back(t);
    }
    return out;
  };

  // Pin one dominant component per flex direction of the double Jacobian.
  {
    const auto cols = free_list();
    Mat<double> jd(ne, int(cols.size()));
    for (int e = 0; e < ne; ++e) {
      const int a = s.edges[e][0], b = s.edges[e][1];
      const Vec3 g = (s.vertices[a] - s.vertices[b]) * 2.0;
      for (size_t j = 0; j < cols.size(); ++j) {
        const int vtx = cols[j] / 3, comp = cols[j] % 3;
        if (vtx == a) jd(e, int(j)) = g[comp];
        if (vtx == b) jd(e, int(j)) = -g[comp];
      }
    }
    const auto kern = kernel_basis(jd, 1e-6);
    for (int j = 0; j < kern.cols; ++j) {
      int arg = -1;
      double mx = 0;
      for (int i = 0; i < kern.rows; ++i) {
        if (!frozen[cols[i]] && std::abs(kern(i, j)) > mx) {
          mx = std::abs(kern(i, j));
          arg = cols[i];
        }
      }
      if (arg >= 0) frozen[arg] = true;
    }
  }

  const auto cols = free_list();
  std::vector<Vec3T<hp>> x(nv);
  for (int v = 0; v < nv; ++v) x[v] = Vec3T<hp>(s.vertices[v]);
  std::vector<hp> ref(ne);
  for (int e = 0; e < ne; ++e) ref[e] = hp(ref_len_sq[e]);

  // Newton-LS toward 1e-25 relative.  Double-rounded references define a
  // rigid perturbation of the flexible variety, so the pinned system is
  // consistent only down to roughly the reference rounding; stop on stall
  // and only reject genuinely unconverged samples.
  const hp tol = hp(1e-25) * hp(scale);
  auto residual_worst = [&]() {
    hp worst = 0;
    for (int e = 0; e < ne; ++e) {
      worst = std::max(
          worst, hp(abs(norm2(x[s.edges[e][0]] - x[s.edges[e][1]]) - ref[e])));
    }
    return worst;
  };
  hp best = residual_worst();
  auto best_x = x;
  for (int iter = 0; iter < 40 && best > tol; ++iter) {
    Mat<hp> jac(ne, int(cols.size()));
    std::vector<hp> rhs(ne);
    for (int e = 0; e < ne; ++e) {
      const int a = s.edges[e][0], b = s.edges[e][1];
      const Vec3T<hp> g = (x[a] - x[b]) * hp(2);
      for (size_t j = 0; j < cols.size(); ++j) {
        const int vtx = cols[j] / 3, comp = cols[j] % 3;
        if (vtx == a) jac(e, int(j)) = g[comp];
        if (vtx == b) jac(e, int(j)) = -g[comp];
      }
      rhs[e] = ref[e] - norm2(x[a] - x[b]);
    }
    const auto step = qr_least_squares(jac, rhs);
    for (size_t j = 0; j < cols.size(); ++j) {
      x[cols[j] / 3][cols[j] % 3] += step[j];
    }
    const hp worst = residual_worst();
    if (worst < best) {
      best = worst;
      best_x = x;
    } else {
      break;
    }
  }
  require(best <= hp(1e-10) * hp(scale), "precision_exhausted",
          "length polish did not converge");
  return best_x;
}

// Dihedral recomputation at 50 digits, mirroring the double convention:
// direction follows the first face's traversal, wings are projected opposite
// vertices, the principal value lies in (0, 2 pi].
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

hp hp_dihedral(const PolyhedralSurface& s, const std::vector<Vec3T<hp>>& x,
               int edge) {
  const int v0 = s.edges[edge][0], v1 = s.edges[edge][1];
  const int f1 = s.edge_faces[edge][0], f2 = s.edge_faces[edge][1];
  Vec3T<hp> d = x[v1] - x[v0];
  d = d / norm(d);
  if (!face_traverses(s, f1, v0, v1)) d = -d;
  auto wing = [&](int f) {
    const Vec3T<hp> w = x[opposite_vertex(s, f, v0, v1)] - x[v0];
    const Vec3T<hp> u = w - d * dot(w, d);
    return u / norm(u);
  };
  const Vec3T<hp> u1 = wing(f1), u2 = wing(f2);
  hp a = atan2(dot(cross(u2, u1), d), dot(u1, u2));
  if (a <= 0) a += 2 * pi_h();
  return a;
}

// Polished branch values: principal parts from the 50-digit coordinates, 2 pi
// offsets carried over from the double branches.
std::vector<hp> hp_branch_values(const PolyhedralSurface& s,
                                 const std::vector<double>& ref_len_sq,
                                 const std::vector<double>& branch_values) {
  require(branch_values.size() == s.edges.size(), "invalid_params",
          "branch count does not match edge count");
  const auto x = polish_vertices(s, ref_len_sq);
  std::vector<hp> out(s.edges.size());
  for (size_t e = 0; e < s.edges.size(); ++e) {
    const hp principal = hp_dihedral(s, x, int(e));
    const double k =
        std::round((branch_values[e] - principal.convert_to<double>()) /
                   (2 * kPi));
    out[e] = principal + hp(k) * 2 * pi_h();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small-support certification over a value list plus pi.

RelationCertificate make_certificate(const std::vector<double>& shared_values,
                                     std::vector<long long> coeffs,
                                     double residual,
                                     const AngleRelationOptions& opt) {
  RelationCertificate cert;
  cert.values = shared_values;
  cert.coefficients = std::move(coeffs);
  cert.residual = residual;
  cert.coefficient_bound = std::max(opt.coefficient_bound, opt.pi_bound);
  cert.precision = opt.precision;
  return cert;
}

std::vector<RelationCertificate> certify_core(const std::vector<hp>& vals,
                                              const AngleRelationOptions& opt) {
  const int n = static_cast<int>(vals.size());
  require(n >= 1, "invalid_params", "no values to certify");
  require(opt.max_support >= 1 && opt.max_support <= 3, "invalid_params",
          "supported relation sizes are 1 to 3");

  std::vector<double> shared(n + 1);
  for (int i = 0; i < n; ++i) shared[i] = vals[i].convert_to<double>();
  shared[n] = kPi;

  std::vector<std::vector<int>> supports;
  for (int i = 0; i < n; ++i) supports.push_back({i});
  if (opt.max_support >= 2) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) supports.push_back({i, j});
    }
  }
  if (opt.max_support >= 3) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) supports.push_back({i, j, k});
      }
    }
  }

  const long long core_bound = std::max(opt.coefficient_bound, opt.pi_bound);
  std::vector<std::optional<FoundRelation>> found(supports.size());
  std::string err_code, err_msg;
#pragma omp parallel for schedule(dynamic)
  for (size_t si = 0; si < supports.size(); ++si) {
    try {
      std::vector<hp> sub;
      for (int id : supports[si]) sub.push_back(vals[id]);
      sub.push_back(pi_h());
      found[si] = search_relation(sub, core_bound, opt.precision);
    } catch (const Error& e) {
#pragma omp critical
      if (err_code.empty()) {
        err_code = e.code();
        err_msg = e.what();
      }
    }
  }
  if (!err_code.empty()) fail(err_code, err_msg);

  RatRREF span(n + 1);
  std::vector<RelationCertificate> kept;
  for (size_t si = 0; si < supports.size(); ++si) {
    if (!found[si]) continue;
    const auto& rel = *found[si];
    const auto& sup = supports[si];
    bool ok = true;
    for (size_t t = 0; t < sup.size(); ++t) {
      if (std::abs(rel.coeffs[t]) > opt.coefficient_bound) ok = false;
    }
    if (std::abs(rel.coeffs.back()) > opt.pi_bound) ok = false;
    if (!ok) continue;
    std::vector<long long> full(n + 1, 0);
    for (size_t t = 0; t < sup.size(); ++t) full[sup[t]] = rel.coeffs[t];
    full[n] = rel.coeffs.back();
    if (!span.add_row(rat_row(full))) continue;
    kept.push_back(make_certificate(shared, std::move(full), rel.residual, opt));
  }
  return kept;
}

std::vector<hp> lift(const std::vector<double>& v) {
  std::vector<hp> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = hp(v[i]);
  return out;
}

nlohmann::json certificate_json(const RelationCertificate& c) {
  nlohmann::json j;
  j["values"] = c.values;
  j["coefficients"] = c.coefficients;
  j["residual"] = c.residual;
  j["precision"] = c.precision;
  j["bound"] = c.coefficient_bound;
  return j;
}

}  // namespace

std::optional<RelationCertificate> find_integer_relation(
    const std::vector<double>& values, long long coefficient_bound,
    double precision) {
  require(values.size() >= 1 && values.size() <= 20, "invalid_params",
          "value list must hold 1 to 20 entries");
  for (double v : values) {
    require(std::isfinite(v), "invalid_params", "values must be finite");
  }
  const auto rel = search_relation(lift(values), coefficient_bound, precision);
  if (!rel) return std::nullopt;
  RelationCertificate cert;
  cert.values = values;
  cert.coefficients = rel->coeffs;
  cert.residual = rel->residual;
  cert.coefficient_bound = coefficient_bound;
  cert.precision = precision;
  return cert;
}

std::optional<RelationCertificate> find_integer_relation(
    const std::vector<std::string>& values, long long coefficient_bound,
    double precision) {
  require(values.size() >= 1 && values.size() <= 20, "invalid_params",
          "value list must hold 1 to 20 entries");
  std::vector<hp> x(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    try {
      x[i] = hp(values[i]);
    } catch (const std::exception&) {
      fail("invalid_params", "unparseable decimal value: " + values[i]);
    }
  }
  const auto rel = search_relation(x, coefficient_bound, precision);
  if (!rel) return std::nullopt;
  RelationCertificate cert;
  cert.values.resize(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    cert.values[i] = x[i].convert_to<double>();
  }
  cert.coefficients = rel->coeffs;
  cert.residual = rel->residual;
  cert.coefficient_bound = coefficient_bound;
  cert.precision = precision;
  return cert;
}

std::vector<RelationCertificate> certify_angle_relations(
    const std::vector<double>& branch_values, const AngleRelationOptions& opt) {
  return certify_core(lift(branch_values), opt);
}

std::vector<RelationCertificate> certify_angle_relations(
    const PolyhedralSurface& s, const std::vector<double>& ref_len_sq,
    const std::vector<double>& branch_values, const AngleRelationOptions& opt) {
  return certify_core(hp_branch_values(s, ref_len_sq, branch_values), opt);
}

bool relation_in_span(const std::vector<RelationCertificate>& certs,
                      const std::vector<long long>& coefficients) {
  require(!certs.empty(), "invalid_params", "no certificates");
  const int cols = static_cast<int>(certs[0].coefficients.size());
  require(int(coefficients.size()) == cols, "invalid_params",
          "coefficient length does not match certificate width");
  RatRREF span(cols);
  for (const auto& c : certs) {
    require(int(c.coefficients.size()) == cols, "invalid_params",
            "certificates over different value lists");
    span.add_row(rat_row(c.coefficients));
  }
  return span.in_span(rat_row(coefficients));
}

int certified_span_dimension(int value_count,
                             const std::vector<RelationCertificate>& certs) {
  require(value_count >= 1, "invalid_params", "empty value list");
  RatRREF span(value_count);
  for (const auto& c : certs) {
    require(int(c.coefficients.size()) == value_count, "invalid_params",
            "certificate width does not match value count");
    span.add_row(rat_row(c.coefficients));
  }
  return value_count - static_cast<int>(span.rows.size());
}

std::string to_string(DehnStatus s) {
  switch (s) {
    case DehnStatus::zero:
      return "ZERO";
    case DehnStatus::constant:
      return "CONSTANT";
    default:
      return "NOT_CERTIFIED";
  }
}

DehnReport verify_dehn_constancy(const FlexPath& path,
                                 const std::vector<DihedralBranch>& branches,
                                 const DehnConstancyOptions& opt) {
  const int ns = static_cast<int>(path.samples.size());
  require(ns >= 1, "invalid_params", "empty flex path");
  const PolyhedralSurface base = path.at(0);
  const int ne = static_cast<int>(base.edges.size());
  require(int(branches.size()) == ne, "invalid_params",
          "branch count does not match edge count");
  for (const auto& b : branches) {
    require(int(b.values.size()) == ns, "invalid_params",
            "branch values do not cover the path");
  }

  const auto ref_len_sq = squared_lengths(path.base);
  DehnReport report;
  std::vector<double> lengths(ne);
  for (int e = 0; e < ne; ++e) {
    lengths[e] = std::sqrt(ref_len_sq[e]);
    report.length_sum += lengths[e];
  }
  report.tolerance = 1e-9 * report.length_sum;
  report.note =
      "one-sided certificate: NOT_CERTIFIED means the detected relations do "
      "not explain the tensor, not that the Dehn invariant varies";

  std::vector<double> vals0(ne);
  for (int e = 0; e < ne; ++e) vals0[e] = branches[e].values[0];
  report.base_certificates =
      certify_angle_relations(base, ref_len_sq, vals0, opt.relation);

  {
    RatRREF span(ne + 1);
    for (const auto& c : report.base_certificates) {
      span.add_row(rat_row(c.coefficients));
    }
    report.zero_weighted_sums = weighted_free_sums(span, lengths, ne);
  }
  const bool zero_ok =
      std::all_of(report.zero_weighted_sums.begin(),
                  report.zero_weighted_sums.end(),
                  [&](double w) { return std::abs(w) <= report.tolerance; });

  std::vector<int> ks;
  if (opt.max_pairs > 0 && ns - 1 > opt.max_pairs) {
    for (int i = 1; i <= opt.max_pairs; ++i) {
      ks.push_back(1 + (ns - 2) * (i - 1) / std::max(1, opt.max_pairs - 1));
    }
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  } else {
    for (int k = 1; k < ns; ++k) ks.push_back(k);
  }

  report.pair_checks.resize(ks.size());
  std::string err_code, err_msg;
  const auto hp0 = hp_branch_values(base, ref_len_sq, vals0);
#pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < ks.size(); ++i) {
    try {
      const int k = ks[i];
      DehnPairCheck check;
      check.sample = k;
      std::vector<double> valsk(ne);
      for (int e = 0; e < ne; ++e) valsk[e] = branches[e].values[k];
      const auto hpk = hp_branch_values(path.at(k), ref_len_sq, valsk);
      std::vector<hp> delta(ne);
      for (int e = 0; e < ne; ++e) delta[e] = hpk[e] - hp0[e];
      check.certificates = certify_core(delta, opt.relation);
      RatRREF span(ne + 1);
      for (const auto& c : check.certificates) {
        span.add_row(rat_row(c.coefficients));
      }
      check.weighted_sums = weighted_free_sums(span, lengths, ne);
      check.certified = std::all_of(
          check.weighted_sums.begin(), check.weighted_sums.end(),
          [&](double w) { return std::abs(w) <= report.tolerance; });
      report.pair_checks[i] = std::move(check);
    } catch (const Error& e) {
#pragma omp critical
      if (err_code.empty()) {
        err_code = e.code();
        err_msg = e.what();
      }
    }
  }
  if (!err_code.empty()) fail(err_code, err_msg);

  const bool constant_ok = std::all_of(
      report.pair_checks.begin(), report.pair_checks.end(),
      [](const DehnPairCheck& c) { return c.certified; });
  report.status = !constant_ok ? DehnStatus::not_certified
                  : zero_ok    ? DehnStatus::zero
                               : DehnStatus::constant;
  return report;
}

double FunctionalSpec::operator()(double x) const {
  const double two_pi = 2 * kPi;
  double best = std::numeric_limits<double>::infinity();
  double fbest = 0;
  for (int k = -8; k <= 8; ++k) {
    const double d = std::abs(x - two_pi * k);
    if (d < best) {
      best = d;
      fbest = 0;
    }
    for (size_t i = 0; i < values.size(); ++i) {
      const double di = std::abs(x - (values[i] + two_pi * k));
      if (di < best) {
        best = di;
        fbest = assigned[i];
      }
    }
  }
  if (best > tolerance * std::max(1.0, std::abs(x))) {
    fail("functional_undefined",
         "argument lies outside the certified span of observed angles");
  }
  return fbest;
}

std::function<double(double)> FunctionalSpec::evaluator() const {
  return [spec = *this](double x) { return spec(x); };
}

FunctionalSpec build_functional(const std::vector<RelationCertificate>& certs,
                                const std::map<int, double>& assignment) {
  require(!certs.empty(), "invalid_params",
          "a certified span is needed to build a functional");
  const std::vector<double>& values = certs[0].values;
  const int n = static_cast<int>(values.size());
  const int pi_col = n - 1;

  RatRREF rref(n);
  for (const auto& c : certs) {
    require(int(c.coefficients.size()) == n, "invalid_params",
            "certificates over different value lists");
    rref.add_row(rat_row(c.coefficients));
  }
  {
    std::vector<long long> pi_row(n, 0);
    pi_row[pi_col] = 1;
    rref.add_row(rat_row(pi_row));
  }

  const auto frees = rref.free_cols();
  const int nf = static_cast<int>(frees.size());
  std::vector<int> where(n, -1);  // value index -> free slot
  for (int j = 0; j < nf; ++j) where[frees[j]] = j;

  // Each value as a row over the free directions.
  std::vector<std::vector<Rat>> expr(n, std::vector<Rat>(nf, Rat(0)));
  for (int i = 0; i < n; ++i) {
    if (where[i] >= 0) {
      expr[i][where[i]] = 1;
    }
  }
  for (size_t j = 0; j < rref.rows.size(); ++j) {
    const int p = rref.pivots[j];
    for (int f = 0; f < nf; ++f) expr[p][f] = -rref.rows[j][frees[f]];
  }

  // Assignment rows: expr(idx) . y = value, solved exactly.
  std::vector<std::vector<Rat>> aug;
  for (const auto& [idx, val] : assignment) {
    require(idx >= 0 && idx < n, "invalid_params",
            "assignment index out of range");
    std::vector<Rat> row = expr[idx];
    row.push_back(Rat(val));
    aug.push_back(std::move(row));
  }

  std::vector<Rat> y(nf, Rat(0));
  std::vector<int> pivot_of_col(nf, -1);
  int rank = 0;
  for (int col = 0; col < nf && rank < int(aug.size()); ++col) {
    int sel = -1;
    for (int r = rank; r < int(aug.size()); ++r) {
      if (aug[r][col] != 0) {
        sel = r;
        break;
      }
    }
    if (sel < 0) continue;
    std::swap(aug[rank], aug[sel]);
    const Rat inv = aug[rank][col];
    for (int t = col; t <= nf; ++t) aug[rank][t] /= inv;
    for (int r = 0; r < int(aug.size()); ++r) {
      if (r == rank || aug[r][col] == 0) continue;
      const Rat f = aug[r][col];
      for (int t = col; t <= nf; ++t) aug[r][t] -= f * aug[rank][t];
    }
    pivot_of_col[col] = rank;
    ++rank;
  }
  for (int r = rank; r < int(aug.size()); ++r) {
    require(aug[r][nf] == 0, "inconsistent_assignment",
            "assignment contradicts a certified relation");
  }
  for (int col = nf - 1; col >= 0; --col) {
    if (pivot_of_col[col] < 0) continue;
    Rat v = aug[pivot_of_col[col]][nf];
    for (int t = col + 1; t < nf; ++t) {
      v -= aug[pivot_of_col[col]][t] * y[t];
    }
    y[col] = v;
  }

  FunctionalSpec out;
  out.values = values;
  out.assigned.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    Rat v = 0;
    for (int f = 0; f < nf; ++f) v += expr[i][f] * y[f];
    out.assigned[i] = v.convert_to<double>();
  }
  return out;
}

SphericalTriangle spherical_triangle(const Vec3& u1, const Vec3& u2,
                                     const Vec3& u3) {
  const Vec3 a1 = normalized(u1), a2 = normalized(u2), a3 = normalized(u3);
  auto corner = [](const Vec3& at, const Vec3& p, const Vec3& q) {
    const Vec3 tp = p - at * dot(p, at);
    const Vec3 tq = q - at * dot(q, at);
    return angle_between(tp, tq);
  };
  SphericalTriangle t;
  t.a = angle_between(a2, a3);
  t.b = angle_between(a1, a3);
  t.c = angle_between(a1, a2);
  t.A = corner(a1, a2, a3);
  t.B = corner(a2, a1, a3);
  t.C = corner(a3, a1, a2);
  return t;
}

double napier_residual(double a, double b, double c, double A, double B,
                       double C) {
  (void)c;
  const double s = std::sin((a + b) / 2);
  const double cab = std::cos((A - B) / 2);
  const double cc = std::cos(C / 2);
  if (std::abs(s) < 1e-8 || std::abs(cab) < 1e-8 || std::abs(cc) < 1e-8) {
    fail("pole_argument", "spherical triangle datum sits at a formula pole");
  }
  const double lhs = std::sin((a - b) / 2) / s;
  const double rhs = std::tan((A - B) / 2) * std::tan(C / 2);
  return std::abs(lhs - rhs);
}

TangentNapier tangent_napier(const PolyhedralSurface& s) {
  const OctahedronLabels lab = labels_from_surface(s);
  auto dir = [&](int from, int to) {
    return normalized(s.vertices[to] - s.vertices[from]);
  };
  TangentNapier out;
  out.tri_a1 = spherical_triangle(dir(lab.a1, lab.c1), dir(lab.a1, lab.c2),
                                  dir(lab.a1, lab.b2));
  out.tri_a2 = spherical_triangle(dir(lab.a2, lab.c1), dir(lab.a2, lab.c2),
                                  dir(lab.a2, lab.b1));

  auto edge = [&](int u, int v) {
    const int e = s.edge_index(u, v);
    require(e >= 0, "bad_index", "expected octahedron edge is missing");
    return e;
  };
  out.alpha = dihedral_value(s, edge(lab.a1, lab.b2));
  out.beta = dihedral_value(s, edge(lab.a1, lab.c1));
  out.gamma = dihedral_value(s, edge(lab.a2, lab.c2));

  auto side_ratio = [](const SphericalTriangle& t) {
    const double den = std::sin((t.a + t.b) / 2);
    require(std::abs(den) >= 1e-8, "pole_argument",
            "link triangle sides sit at a formula pole");
    return std::sin((t.a - t.b) / 2) / den;
  };
  for (double half : {out.alpha / 2, out.beta / 2, out.gamma / 2}) {
    require(std::abs(std::cos(half)) >= 1e-8, "pole_argument",
            "dihedral angle sits at a tangent pole");
  }
  out.lhs4 = side_ratio(out.tri_a1);
  out.rhs4 = std::tan(out.beta / 2) * std::tan(out.alpha / 2);
  out.lhs5 = side_ratio(out.tri_a2);
  out.rhs5 = -std::tan(out.gamma / 2) * std::tan(out.alpha / 2);
  return out;
}

std::string certificate_to_json(const RelationCertificate& c) {
  return certificate_json(c).dump();
}

RelationCertificate certificate_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RelationCertificate c;
    c.values = j.at("values").get<std::vector<double>>();
    c.coefficients = j.at("coefficients").get<std::vector<long long>>();
    c.residual = j.at("residual").get<double>();
    c.precision = j.at("precision").get<double>();
    c.coefficient_bound = j.at("bound").get<long long>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail("invalid_params", std::string("bad certificate json: ") + e.what());
  }
}

std::string dehn_report_to_json(const DehnReport& r) {
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["length_sum"] = r.length_sum;
  j["tolerance"] = r.tolerance;
  j["note"] = r.note;
  j["base_certificates"] = nlohmann::json::array();
  for (const auto& c : r.base_certificates) {
    j["base_certificates"].push_back(certificate_json(c));
  }
  j["zero_weighted_sums"] = r.zero_weighted_sums;
  j["pair_checks"] = nlohmann::json::array();
  for (const auto& p : r.pair_checks) {
    nlohmann::json pj;
    pj["sample"] = p.sample;
    pj["certified"] = p.certified;
    pj["weighted_sums"] = p.weighted_sums;
    pj["certificates"] = nlohmann::json::array();
    for (const auto& c : p.certificates) {
      pj["certificates"].push_back(certificate_json(c));
    }
    j["pair_checks"].push_back(pj);
  }
  return j.dump();
}

}  // namespace bellows
