#pragma once

#include "qsf/linalg.hpp"

#include <memory>
#include <vector>

namespace qsf {

// Multiplication table of a finite group over element indices 0..n-1.
struct GroupTable {
  std::vector<std::vector<int>> mult;  // mult[g][h] = g*h
  std::vector<int> inverse;
  int identity = 0;

  int order() const { return int(mult.size()); }

  static GroupTable trivial();
  static GroupTable cyclic(int n);
  // Permutations of {0..n-1} in lexicographic one-line order,
  // composed as (g*h)(x) = g(h(x)).
  static GroupTable symmetric(int n);
  // Validates associativity, identity, and inverses.
  static GroupTable from_table(std::vector<std::vector<int>> table);

  bool operator==(const GroupTable& o) const {
    return mult == o.mult && identity == o.identity;
  }
};

enum class Backend { GridHilb, RepG };

struct CatImpl;
struct ObjImpl;

class Obj;
class Mor;

// A concrete strict tensor category: either grid-graded Hilbert spaces
// over n points or unitary representations of a finite group.
class Category {
 public:
  static Category grid_hilb(int n);
  static Category rep_group(const GroupTable& g);

  Backend backend() const;
  int grid_size() const;            // GridHilb only
  const GroupTable& group() const;  // RepG only

  Obj unit() const;
  // GridHilb generator: object with the given cell dimensions.
  Obj grid_object(const Eigen::MatrixXi& dims) const;
  // RepG generator: one unitary matrix per group element, validated
  // as a representation (homomorphism + unitarity) within eps.
  Obj rep_object(const std::vector<Mat>& rep, double eps = 1e-10) const;

  bool operator==(const Category& o) const;
  bool operator!=(const Category& o) const { return !(*this == o); }

 private:
  explicit Category(std::shared_ptr<const CatImpl> impl);
  std::shared_ptr<const CatImpl> impl_;
  friend class Obj;
  friend struct ObjImpl;
};

// An object: a word of generator objects.  The empty word is the tensor
// unit, and tensoring concatenates words, so associativity and the unit
// laws hold on the nose.  The linear carrier has a canonical ordered
// basis (grid paths / iterated Kronecker factors) fixed once per word.
class Obj {
 public:
  Obj() = default;

  Category category() const;
  Backend backend() const;
  int dim() const;
  bool is_zero() const { return dim() == 0; }

  Obj tensor(const Obj& o) const;
  Obj dual() const;

  // Grading: every basis vector sits in one cell (i,j) of the grid;
  // cells are contiguous ranges in the canonical order.  RepG objects
  // are a single (0,0) cell.
  int grade_count() const;  // n for GridHilb, 1 for RepG
  int grade_start(int basis_index) const;
  int grade_end(int basis_index) const;
  // offset and length of the (i,j) block in the canonical basis
  std::pair<int, int> grade_range(int i, int j) const;
  // per-cell multiplicities (n x n for GridHilb; 1 x 1 = dim for RepG)
  Eigen::MatrixXi dims_grid() const;

  // RepG: the materialized representation matrix of one group element.
  const Mat& rep_matrix(int g) const;

  bool operator==(const Obj& o) const;
  bool operator!=(const Obj& o) const { return !(*this == o); }

  bool valid() const { return impl_ != nullptr; }

 private:
  std::shared_ptr<const ObjImpl> impl_;
  explicit Obj(std::shared_ptr<const ObjImpl> impl) : impl_(std::move(impl)) {}
  friend class Category;
  friend class Mor;
  friend struct ObjImpl;
};

// A morphism: a matrix in the canonical bases of its endpoints.
// GridHilb matrices vanish off the matching-grade blocks; RepG matrices
// intertwine the representations.  The arithmetic operations preserve
// both properties, so they are only verified when a morphism enters
// from outside (Mor::checked, io loaders).
class Mor {
 public:
  Mor() = default;
  // Trusts the caller about grading/intertwining; checks shapes only.
  Mor(const Obj& dom, const Obj& cod, Mat m);
  // Validates the backend morphism law within eps before accepting.
  static Mor checked(const Obj& dom, const Obj& cod, const Mat& m,
                     double eps = 1e-10);

  static Mor identity(const Obj& x);
  static Mor zero(const Obj& dom, const Obj& cod);

  const Obj& dom() const { return dom_; }
  const Obj& cod() const { return cod_; }
  const Mat& mat() const { return m_; }

  Mor operator*(const Mor& g) const;  // composition: this after g
  Mor tensor(const Mor& g) const;
  Mor adjoint() const;
  Mor operator+(const Mor& g) const;
  Mor operator-(const Mor& g) const;
  friend Mor operator*(cplx s, const Mor& f) {
    return Mor(f.dom_, f.cod_, s * f.m_);
  }

  double norm() const { return m_.norm(); }  // Frobenius
  bool valid() const { return dom_.valid(); }

 private:
  Obj dom_, cod_;
  Mat m_;
};

// Orthonormal basis of Hom(x, y) under the Frobenius inner product
// tr(f* g).  Deterministic order; may be empty.
std::vector<Mor> hom_basis(const Obj& x, const Obj& y);

// Frobenius inner product tr(f* g) of two parallel morphisms.
cplx frobenius_inner(const Mor& f, const Mor& g);

// The canonical functional on End(unit): the sum of the diagonal
// coefficients (equivalently the matrix trace in both backends).
cplx tau(const Mor& f);

struct DualitySolution {
  Obj obj;        // X
  Obj dual;       // X bar
  Mor gamma;      // unit -> dual (x) X
  Mor gamma_bar;  // unit -> X (x) dual
};

// The balanced solution of the conjugate equations built from the
// canonical basis: every basis vector pairs with its reverse in the
// dual word with weight one.  Satisfies the conjugate equations
// exactly and balances the two induced traces.
DualitySolution balanced_duality(const Obj& x);

struct ScalarDimension {
  Eigen::MatrixXd per_cell;
  double total = 0.0;
};
ScalarDimension scalar_dimension(const Obj& x);

// Match two balanced duality solutions for the same object.  Searches
// the direct form (u acting through the primal leg) and the mirrored
// form (u acting through the dual leg), and reports which matched.
struct DualityComparison {
  bool equivalent = false;
  bool mirrored = false;  // true when only the dual-leg form matched
  Mor u;
  double residual = 0.0;
};
DualityComparison compare_duality(const DualitySolution& a,
                                  const DualitySolution& b,
                                  double eps = 1e-10);

// Factor an idempotent endomorphism p = w v with v w = 1 through a
// fresh object (a grid object / plain representation, not a word).
struct MorSplit {
  Obj image;
  Mor v;  // X -> image
  Mor w;  // image -> X
};
MorSplit split_idempotent(const Mor& p, double eps = 1e-7);

// Direct sum with isometric injections having orthogonal ranges that
// sum to the identity.  The sum object is a fresh generator object.
struct DirectSum {
  Obj total;
  std::vector<Mor> injections;  // injections[k]: parts[k] -> total
};
DirectSum direct_sum(const std::vector<Obj>& parts);

// Basis index of the pair (i-th basis vector of x, j-th of y) inside
// x.tensor(y); -1 marks pairs that do not occur (non-composable grades).
Eigen::MatrixXi tensor_pair_table(const Obj& x, const Obj& y);

// tail . (f (x) 1_z) and tail . (1_z (x) f), assembled columnwise so the
// tensor product with the identity leg is never materialized.  Needed
// whenever the spectator leg is large (the kron would be quadratic in it).
Mor compose_right_leg(const Mor& tail, const Mor& f, const Obj& z);
Mor compose_left_leg(const Mor& tail, const Obj& z, const Mor& f);

}  // namespace qsf
