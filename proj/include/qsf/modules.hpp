#pragma once

#include "qsf/algebra.hpp"

namespace qsf {

// Orthonormal basis of the maps M -> N commuting with every action the
// two modules carry.  Which algebra acts on which side is passed
// explicitly; both modules must carry the same kinds of action.
std::vector<Mor> bimodule_hom_basis(const ActionModule& m,
                                    const ActionModule& n,
                                    const std::optional<Algebra>& left,
                                    const std::optional<Algebra>& right);

std::vector<Mor> right_module_hom_basis(const Algebra& a,
                                        const ActionModule& m,
                                        const ActionModule& n);

// Endomorphism algebra of a module, realized concretely: orthonormal
// basis, structure constants, and the coordinates of the identity.
struct HomAlgebra {
  ActionModule module;
  std::vector<Mor> basis;
  // structure[k](m, l) is the coefficient of basis[m] in
  // basis[k] composed after basis[l]
  std::vector<Mat> structure;
  Vec identity_coords;
  double closure_residual = 0.0;

  int dim() const { return (int)basis.size(); }
  Mor realize(const Vec& coords) const;
  Vec project(const Mor& f) const;
};

HomAlgebra end_algebra(const ActionModule& m,
                       const std::optional<Algebra>& left,
                       const std::optional<Algebra>& right);

// Primitive central idempotents of a semisimple HomAlgebra, realized
// as endomorphisms of the module carrier.  Deterministic for a fixed
// seed; throws Error::Kind::Defective on non-semisimple input.
std::vector<Mor> semisimple_split(const HomAlgebra& e, uint64_t seed = 0);

// Pairwise-orthogonal minimal idempotents refining the central ones;
// their splits are the simple summands of the module.
std::vector<Mor> primitive_idempotents(const HomAlgebra& e,
                                       uint64_t seed = 0);

// Coequalizer of the two actions on X (x) Y, realized as the image of
// the separability idempotent.
struct RelativeTensor {
  Obj object;      // X (x)_A Y
  Mor projection;  // X (x) Y -> object
  Mor inclusion;   // object -> X (x) Y, projection . inclusion = 1
};

RelativeTensor relative_tensor(const Algebra& a, const ActionModule& x,
                               const ActionModule& y, const Mor& witness,
                               double eps = Tolerance{}.verify_eps);

// Left module structure on the dual of a right module.
ActionModule dual_module(const Algebra& a, const ActionModule& y,
                         const DualitySolution& yd);

struct InternalHom {
  Obj hom;  // [X, Y]
  Obj x_carrier;
  Obj y_carrier;
  Mor ev;  // [X,Y] (x) X -> Y
  RelativeTensor rel;
  DualitySolution y_dual;
  DualitySolution t_dual;
};

InternalHom internal_hom(const Algebra& a, const ActionModule& x,
                         const ActionModule& y, const Mor& witness);

// The adjunction Hom(C, [X,Y]) ~ Hom_mod(C (x) X, Y): the forward
// direction composes with the evaluation, the inverse pairs the map
// against the chosen dualities (a closed form, no linear solve).
Mor internal_hom_adjunct(const InternalHom& ih, const Mor& phi);
Mor internal_hom_transpose(const InternalHom& ih, const Obj& c,
                           const Mor& psi);

struct InternalHomAlgebra {
  Algebra algebra;
  InternalHom hom;
};

InternalHomAlgebra internal_hom_algebra(const Algebra& a,
                                        const ActionModule& x,
                                        const Mor& witness);

struct ModuleSummand {
  ActionModule module;
  Mor inclusion;   // summand -> X, isometric
  Mor projection;  // X -> summand, projection . inclusion = 1
  int end_dim = 0;
  bool simple = false;
};

std::vector<ModuleSummand> decompose_module(
    const Algebra& a, const ActionModule& x,
    const std::optional<Algebra>& left_algebra = std::nullopt,
    uint64_t seed = 0);

}  // namespace qsf
