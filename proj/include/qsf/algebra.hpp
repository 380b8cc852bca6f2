#pragma once

#include "qsf/category.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qsf {

// Algebra object (A, m, i): carrier A, multiplication m: A(x)A -> A,
// unit i: 1 -> A.  Laws are not enforced on construction; run the
// verify_* predicates to obtain residual reports.
struct Algebra {
  Obj carrier;
  Mor mult;
  Mor unit;
};

// Comultiplication and counit paired with an algebra.
struct FrobeniusStructure {
  Mor comult;  // A -> A(x)A
  Mor counit;  // A -> 1
};

// One- or two-sided action of an algebra on an object.
struct ActionModule {
  Obj carrier;
  std::optional<Mor> left;   // A(x)X -> X
  std::optional<Mor> right;  // X(x)A -> X
};

struct CheckItem {
  std::string name;
  double residual = 0.0;
};

// Named residuals of a verification run.  pass holds iff every
// residual is at most tolerance.
struct Report {
  std::vector<CheckItem> checks;
  double tolerance = 0.0;
  bool pass = false;

  double max_residual() const;
  const CheckItem* find(const std::string& name) const;
};

Report verify_algebra(const Algebra& a,
                      double tol = Tolerance{}.verify_eps);

// Checks associativity/unit laws plus both module-morphism identities
// for the adjoint comultiplication:
//   (m(x)1)(1(x)m*) = m*m = (1(x)m)(m*(x)1)
Report verify_cstar_frobenius(const Algebra& a,
                              double tol = Tolerance{}.verify_eps);

// Coisometry condition m m* = 1 on the carrier.
Report is_special(const Algebra& a, double tol = Tolerance{}.verify_eps);

// Coassociativity, counit laws, and the compatibility
//   (m(x)1)(1(x)comult) = comult m = (1(x)m)(comult(x)1).
Report verify_frobenius(const Algebra& a, const FrobeniusStructure& fs,
                        double tol = Tolerance{}.verify_eps);

Report verify_action(const Algebra& a, const ActionModule& x,
                     double tol = Tolerance{}.verify_eps);

// Bimodule splitting f of the multiplication: m f = 1 and
// f m = (m(x)1)(1(x)f) = (1(x)m)(f(x)1).  Solved through the
// equivalent centralizing form f = (m(x)1)(1(x)z) with z: 1 -> A(x)A
// satisfying (m(x)1)(1(x)z) = (1(x)m)(z(x)1) and m z = unit; the
// minimum-norm z is selected, so the result is deterministic.  Throws
// Error::Kind::NoSolution when no witness exists at the given rank
// tolerance.
Mor separability_witness(const Algebra& a, double rank_eps = 1e-7);

struct Connectivity {
  bool connected = false;
  int hom_dim = 0;  // dim Hom(1, A)
};
Connectivity is_connected(const Algebra& a);

// For a connected algebra in a grid category: the unique diagonal
// cell (j, j) supporting the carrier and the unit component.
int support_block(const Algebra& a, double tol = Tolerance{}.verify_eps);

struct TransportedAlgebra {
  Algebra algebra;
  Mor iso;  // t: A -> A', with mult' = t m (t^-1 (x) t^-1)
};
TransportedAlgebra transport_algebra(const Algebra& a, const Mor& t);

// --- construction helpers -------------------------------------------

// Build an algebra on x from left-multiplication matrices: the product
// of basis vectors a and b is sum_k left_mult[a](k, b) e_k, and the
// identity element has the given coordinates.
Algebra algebra_from_left_mult(const Obj& x,
                               const std::vector<Mat>& left_mult,
                               const Vec& unit_coords);

// Coordinatewise product, identity = sum of all basis vectors.
Algebra pointwise_algebra(const Obj& x);

// Full matrix algebra on an n^2-dimensional carrier whose basis is read
// row-major as elementary matrices; the product is scaled by `scale`.
Algebra matrix_algebra(const Obj& x, int n, double scale = 1.0);

// Group algebra: e_a e_b = e_{ab}, identity = e_e.
Algebra group_algebra(const Obj& x, const GroupTable& g);

// C[x]/(x^2) on a 2-dimensional carrier.
Algebra dual_numbers_algebra(const Obj& x);

// Direct sum of algebras (componentwise product, sum of units).
Algebra algebra_direct_sum(const Algebra& a, const Algebra& b);

}  // namespace qsf
