#pragma once

#include "qsf/modules.hpp"

#include <cstdint>
#include <string>

namespace qsf {

// Rescale an algebra satisfying the adjoint-comultiplication module
// laws until m m* = 1, by transporting along sqrt(m m*).  The factor
// m m* is verified to commute with both multiplications first.
TransportedAlgebra specialize(const Algebra& a);

// Conjugate a right module until the action is a coisometry:
//   h = sqrt(r r*),  r' = h^{-1} r (h (x) 1).
// h^{-1} is then a module isomorphism (X, r) -> (X, r').  A left
// action, when present, is carried along by the same conjugation.
struct ModuleUnitarization {
  ActionModule module;
  Mor h;      // positive invertible endomorphism of the carrier
  Mor h_inv;
};
ModuleUnitarization unitarize_module(const Algebra& q, const ActionModule& x);

// Split an algebra into indecomposable summands along the primitive
// idempotents of its endomorphism algebra as a bimodule over itself.
// Each summand carries the induced product v m (w (x) w) and unit v i;
// the pairs satisfy v_k w_k = 1 and sum_k w_k v_k = 1.
struct AlgebraSummand {
  Algebra algebra;
  Mor v;  // original carrier -> summand carrier
  Mor w;  // summand carrier -> original carrier
};
std::vector<AlgebraSummand> decompose_algebra(const Algebra& a,
                                              uint64_t seed = 0);

// Equip a connected algebra admitting a multiplication splitting with
// a Frobenius structure: the counit comes from pairing the carrier
// against its dual through the invertible module map
//   f = ((i* m) (x) 1) . (1 (x) gamma_bar),
// and the comultiplication is solved from the counit and Frobenius
// laws as a linear system.
struct FrobeniusPromotion {
  FrobeniusStructure structure;
  Mor pairing;  // f above, an invertible right-module map A -> dual(A)
};
FrobeniusPromotion frobenius_promotion(const Algebra& a);

struct SolverStats {
  uint64_t seed = 0;
  int restarts = 0;
  int iterations = 0;
  double residual = 0.0;
};

struct SpecialUnitarization {
  Algebra algebra;  // passes is_special and verify_cstar_frobenius
  Mor iso;          // positive invertible t with algebra = t-transport
  SolverStats stats;
};

// Numeric search for an invertible t in Hom(A, A) whose transported
// multiplication is a coisometry satisfying the adjoint-Frobenius
// laws.  The search runs over hermitian t (a positive solution always
// exists when any does), starts at sqrt(m m*), and the result is
// gauge-fixed to the positive factor of its polar decomposition, which
// makes the output unique on each unitary orbit of solutions.  Inputs
// that already pass both checks return t = 1 with zero iterations.
SpecialUnitarization solver_unitarize(const Algebra& a, uint64_t seed = 0,
                                      int max_iterations = 200,
                                      int restarts = 10);

// solver_unitarize plus the connectivity precondition dim Hom(1,A)=1.
SpecialUnitarization connected_unitarize(const Algebra& a, uint64_t seed = 0,
                                         int max_iterations = 200,
                                         int restarts = 10);

// Content fingerprint of an algebra: SHA-256 over a canonical dump of
// the backend, the carrier data, and the structure matrices.
std::string algebra_fingerprint(const Algebra& a);

struct SummandTrace {
  int dim = 0;
  bool connected = false;
  std::string method;     // "exact" or "solver"
  double residual = 0.0;  // worst postcondition residual of the summand
  SolverStats stats;
};

struct CertificateResiduals {
  double special = 0.0;
  double frobenius = 0.0;
  double iso = 0.0;
};

struct UnitarizationCertificate {
  std::string input_hash;
  Algebra output;
  Mor iso;  // input carrier -> output carrier
  CertificateResiduals residuals;
  std::string method;  // "exact-wedderburn" or "solver"
  SolverStats stats;   // aggregated over the summand solver runs
  std::vector<SummandTrace> summands;
};

// Full pipeline: verify the algebra laws, require a multiplication
// splitting (throwing Error::Kind::NoSolution otherwise), split into
// indecomposable summands, rebuild each as a coisometric-Frobenius
// algebra, and reassemble with a certificate binding input to output.
UnitarizationCertificate unitarize(const Algebra& a, uint64_t seed = 0,
                                   int max_iterations = 200,
                                   int restarts = 10);

// Recompute every certificate claim from scratch against the given
// input; pass iff all residuals meet the solver tolerance.
Report verify_certificate(const UnitarizationCertificate& cert,
                          const Algebra& a,
                          double tol = Tolerance{}.solver_eps);

// Independent classical decomposition for algebras living in a plain
// Hilbert-space backend (trivial group, or a grid carrier confined to
// one diagonal cell): an explicit isomorphism onto a direct sum of
// full matrix blocks carrying the coisometric product (each block's
// product scaled by n^{-1/2}).  Serves as the deterministic oracle
// the numeric pipeline is checked against.
struct WedderburnDecomposition {
  std::vector<int> blocks;  // matrix sizes n_k, in split order
  Algebra algebra;
  Mor iso;
};
WedderburnDecomposition wedderburn_exact(const Algebra& a, uint64_t seed = 0);

// Dimension of the nilradical, computed from the rank of the trace
// form tr(L_x L_y) of the left regular representation.  Zero exactly
// when the algebra is semisimple.
int radical_dimension(const Algebra& a,
                      double rank_eps = Tolerance{}.cluster_eps);

}  // namespace qsf
