#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bellows/flex.hpp"
#include "bellows/invariants.hpp"
#include "bellows/surface.hpp"

namespace bellows {

// Certified integer relation sum_i c_i x_i = 0 over a stored value list.
// Coefficients are gcd-normalized with the first nonzero entry positive.
// When produced by the angle routines the list is the 12 edge branch values
// followed by pi.
struct RelationCertificate {
  std::vector<double> values;
  std::vector<long long> coefficients;
  double residual = 0.0;
  long long coefficient_bound = 0;
  double precision = 0.0;
};

std::string certificate_to_json(const RelationCertificate& c);
RelationCertificate certificate_from_json(const std::string& text);

// Searches for a nonzero integer vector c with |c_i| <= coefficient_bound and
// |sum c_i values_i| below precision * max|values| * sum|c_i|.  Returns the
// accepted candidate with minimal coefficient 1-norm, or nothing when every
// candidate within the bound fails the residual test.  Throws
// precision_exhausted when the requested bound is undecidable at the given
// precision (the spurious-combination floor sits above the noise).
std::optional<RelationCertificate> find_integer_relation(
    const std::vector<double>& values, long long coefficient_bound,
    double precision = 1e-13);

// Same search on decimal-string values parsed at 50 significant digits.
// Use for synthesized high-precision inputs where bounds beyond the
// double-precision decidability limit are needed.
std::optional<RelationCertificate> find_integer_relation(
    const std::vector<std::string>& values, long long coefficient_bound,
    double precision = 1e-30);

struct AngleRelationOptions {
  long long coefficient_bound = 8;  // per angle value
  long long pi_bound = 16;
  double precision = 1e-12;
  int max_support = 3;  // angles per relation searched
};

// Independent generating set of small-support relations among the given
// branch values and pi.  All certificates share one value list with pi as
// the last entry.  Search order (singletons, then pairs, then triples,
// lexicographic) is fixed, so output is deterministic.
std::vector<RelationCertificate> certify_angle_relations(
    const std::vector<double>& branch_values,
    const AngleRelationOptions& opt = {});

// Same search, but the branch values are first re-derived from vertex
// coordinates Newton-polished against the reference squared lengths in
// 50-digit floats, removing double rounding from the inputs.
std::vector<RelationCertificate> certify_angle_relations(
    const PolyhedralSurface& s, const std::vector<double>& ref_len_sq,
    const std::vector<double>& branch_values,
    const AngleRelationOptions& opt = {});

// Whether the coefficient vector (over the same value list as certs) lies in
// the rational row span of the certified relations.
bool relation_in_span(const std::vector<RelationCertificate>& certs,
                      const std::vector<long long>& coefficients);

// Dimension of span_Q{values} implied by the certificates: value count minus
// rank of the relation rows.
int certified_span_dimension(int value_count,
                             const std::vector<RelationCertificate>& certs);

enum class DehnStatus { not_certified, constant, zero };
std::string to_string(DehnStatus s);

struct DehnPairCheck {
  int sample = 0;
  std::vector<RelationCertificate> certificates;
  std::vector<double> weighted_sums;  // one per free non-pi direction
  bool certified = false;
};

struct DehnReport {
  DehnStatus status = DehnStatus::not_certified;
  std::vector<RelationCertificate> base_certificates;
  std::vector<double> zero_weighted_sums;
  std::vector<DehnPairCheck> pair_checks;
  double length_sum = 0.0;
  double tolerance = 0.0;
  std::string note;
};

std::string dehn_report_to_json(const DehnReport& r);

struct DehnConstancyOptions {
  AngleRelationOptions relation;
  int max_pairs = 0;  // 0 compares every sample against sample 0
};

// One-sided Dehn-invariant check along a traced flex.  CONSTANT when, for
// every sample, the angle differences against sample 0 are certified
// relations whose length-weighted sums vanish on each free direction;
// additionally ZERO when the sample-0 Dehn vector itself reduces to a pure
// pi combination.  NOT_CERTIFIED means the detected relations do not explain
// the tensor, never that nonconstancy was proved.
DehnReport verify_dehn_constancy(const FlexPath& path,
                                 const std::vector<DihedralBranch>& branches,
                                 const DehnConstancyOptions& opt = {});

// Q-linear functional determined on the certified span of a value list,
// with f(pi) = 0.  Arguments are matched against the stored values modulo
// 2 pi shifts; anything outside the span throws functional_undefined.
struct FunctionalSpec {
  std::vector<double> values;    // span sample points, pi last
  std::vector<double> assigned;  // f(values[i])
  double tolerance = 1e-9;

  double operator()(double x) const;
  std::function<double(double)> evaluator() const;
};

// Solves for the unique functional consistent with all certificates, the
// given assignments (value index -> rational value as double), f(pi) = 0,
// and zero on unassigned free directions.  Throws inconsistent_assignment
// when the pinned values contradict a certificate.
FunctionalSpec build_functional(const std::vector<RelationCertificate>& certs,
                                const std::map<int, double>& assignment);

// Spherical triangle with sides a, b, c (arc lengths) opposite to angles
// A, B, C.
struct SphericalTriangle {
  double a = 0, b = 0, c = 0;
  double A = 0, B = 0, C = 0;
};

// Triangle spanned by three directions on the unit sphere; side a subtends
// u2, u3 and angle A sits at u1.
SphericalTriangle spherical_triangle(const Vec3& u1, const Vec3& u2,
                                     const Vec3& u3);

// |sin((a-b)/2)/sin((a+b)/2) - tan((A-B)/2) tan(C/2)|, the Napier analogy
// defect.  Throws pole_argument when an input sits within 1e-8 of a pole of
// either side.  c is unused by the formula and kept for the record.
double napier_residual(double a, double b, double c, double A, double B,
                       double C);

inline double napier_residual(const SphericalTriangle& t) {
  return napier_residual(t.a, t.b, t.c, t.A, t.B, t.C);
}

// Napier checks on the two vertex-link triangles of a flexed tangent
// octahedron: the triangle C1 B2 C2 seen from A1 and B1 C1 C2 seen from A2.
// lhs holds the side ratio, rhs the dihedral form tan(beta/2) tan(alpha/2)
// (resp. -tan(gamma/2) tan(alpha/2)); the lhs values are plane-angle data
// and stay constant along the flex.
struct TangentNapier {
  SphericalTriangle tri_a1, tri_a2;
  double alpha = 0, beta = 0, gamma = 0;
  double lhs4 = 0, rhs4 = 0;
  double lhs5 = 0, rhs5 = 0;

  double residual4() const { return std::abs(lhs4 - rhs4); }
  double residual5() const { return std::abs(lhs5 - rhs5); }
  double lhs_gap() const { return std::abs(lhs4 - lhs5); }
};

TangentNapier tangent_napier(const PolyhedralSurface& s);

}  // namespace bellows
