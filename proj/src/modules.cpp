#include "qsf/modules.hpp"

#include <random>

namespace qsf {

namespace {

double mat_dev(const Mat& a, const Mat& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

Vec vec_of(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

// orthonormal basis of the span of a family of morphisms M -> N
std::vector<Mor> orthonormal_span(const Obj& dom, const Obj& cod,
                                  const std::vector<Mat>& family) {
  std::vector<Mor> out;
  if (family.empty()) return out;
  const long n = family[0].size();
  Mat stack(n, family.size());
  for (size_t k = 0; k < family.size(); ++k) stack.col(k) = vec_of(family[k]);
  Eigen::BDCSVD<Mat> svd(stack, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cut = sv.size() ? sv(0) * 1e-9 : 0.0;
  for (int k = 0; k < sv.size(); ++k) {
    if (sv(k) <= cut) break;
    Mat m = Eigen::Map<const Mat>(svd.matrixU().col(k).data(), cod.dim(),
                                  dom.dim());
    out.emplace_back(dom, cod, std::move(m));
  }
  return out;
}

// structure coordinates of products within an orthonormal family, plus
// the worst projection residual (how far the family is from closed)
struct StructureData {
  std::vector<Mat> coeff;  // coeff[k](m, l)
  double residual = 0.0;
};

StructureData structure_of(const std::vector<Mor>& basis) {
  const int b = (int)basis.size();
  StructureData out;
  out.coeff.assign(b, Mat::Zero(b, b));
  for (int k = 0; k < b; ++k)
    for (int l = 0; l < b; ++l) {
      Mor prod = basis[k] * basis[l];
      Mat rem = prod.mat();
      for (int m = 0; m < b; ++m) {
        cplx c = frobenius_inner(basis[m], prod);
        out.coeff[k](m, l) = c;
        rem -= c * basis[m].mat();
      }
      if (rem.size())
        out.residual = std::max(out.residual, rem.cwiseAbs().maxCoeff());
    }
  return out;
}

// coordinate basis of the center: solutions of x b_l = b_l x for all l
std::vector<Vec> center_coords(const StructureData& sd) {
  const int b = (int)sd.coeff.size();
  if (b == 0) return {};
  Mat rows(b * b, b);
  for (int l = 0; l < b; ++l)
    for (int m = 0; m < b; ++m)
      for (int k = 0; k < b; ++k)
        rows(l * b + m, k) = sd.coeff[k](m, l) - sd.coeff[l](m, k);
  // a commutative algebra leaves only rounding dirt here, and a relative
  // rank cutoff would mistake that dirt for full rank
  if (rows.cwiseAbs().maxCoeff() <= 1e-11 * b) {
    std::vector<Vec> out;
    for (int j = 0; j < b; ++j) out.push_back(Vec::Unit(b, j));
    return out;
  }
  auto sol = solve_linear_subspace(rows, Vec::Zero(b * b));
  std::vector<Vec> out;
  for (int j = 0; j < sol.nullspace.cols(); ++j)
    out.push_back(sol.nullspace.col(j));
  return out;
}

std::vector<Mor> corner_family(const std::vector<Mor>& basis, const Mor& p) {
  std::vector<Mat> fam;
  for (const Mor& bm : basis) fam.push_back(p.mat() * bm.mat() * p.mat());
  return orthonormal_span(p.dom(), p.cod(), fam);
}

Mor realize_coords(const std::vector<Mor>& basis, const Vec& coords) {
  Mor out = Mor::zero(basis.at(0).dom(), basis.at(0).cod());
  for (size_t k = 0; k < basis.size(); ++k) out = out + coords(k) * basis[k];
  return out;
}

// recursive splitting driver; in central mode stops at blocks whose
// corner has a one-dimensional center, in minimal mode at corners of
// dimension one
void split_rec(const std::vector<Mor>& ambient, const Mor& p, bool minimal,
               std::mt19937_64& rng, std::vector<Mor>& out, int depth) {
  if (depth > 24)
    throw Error(Error::Kind::Internal, "idempotent splitting ran away");
  const Tolerance tol;
  auto corner = corner_family(ambient, p);
  if (corner.size() <= 1) {
    out.push_back(p);
    return;
  }

  std::vector<Mor> generators;
  if (minimal) {
    generators = corner;
  } else {
    auto sd = structure_of(corner);
    auto zc = center_coords(sd);
    if (zc.size() <= 1) {
      out.push_back(p);
      return;
    }
    for (const Vec& z : zc) generators.push_back(realize_coords(corner, z));
  }

  std::uniform_real_distribution<double> noise(0.0, 1.0);
  for (int attempt = 0; attempt < 3; ++attempt) {
    Mor z = Mor::zero(p.dom(), p.cod());
    for (size_t j = 0; j < generators.size(); ++j)
      z = z + cplx(double(j + 1) + 0.25 * noise(rng)) * generators[j];
    // push the block spectrum away from the kernel eigenvalue of the
    // ambient complement
    const double shift = 2.0 * (z.norm() + 1.0);
    z = z + cplx(shift) * p;

    SpectralSplit sp;
    try {
      sp = spectral_idempotents(z.mat(), tol.cluster_eps, tol.solver_eps);
    } catch (const Error& e) {
      if (e.kind == Error::Kind::Defective && attempt + 1 < 3) continue;
      throw;
    }
    std::vector<Mor> kept;
    for (size_t i = 0; i < sp.idempotents.size(); ++i) {
      const Mat& q = sp.idempotents[i];
      if (mat_dev(q * p.mat(), q) <= 1e-8 * (1.0 + q.cwiseAbs().maxCoeff()))
        kept.emplace_back(p.dom(), p.cod(), q);
    }
    if (kept.empty())
      throw Error(Error::Kind::Internal,
                  "idempotent splitting lost its block");
    if (kept.size() > 1) {
      for (const Mor& q : kept)
        split_rec(ambient, q, minimal, rng, out, depth + 1);
      return;
    }
    // a single cluster means the generic element failed to separate;
    // retry with fresh noise before concluding the input was bad
  }
  throw Error(Error::Kind::Defective,
              "idempotent splitting: block refuses to split, the "
              "endomorphism algebra is not semisimple");
}

void check_module_shapes(const ActionModule& m) {
  if (!m.left && !m.right)
    throw Error(Error::Kind::Shape, "module: no action present");
}

}  // namespace

std::vector<Mor> bimodule_hom_basis(const ActionModule& m,
                                    const ActionModule& n,
                                    const std::optional<Algebra>& left,
                                    const std::optional<Algebra>& right) {
  check_module_shapes(m);
  if (m.left.has_value() != n.left.has_value() ||
      m.right.has_value() != n.right.has_value())
    throw Error(Error::Kind::Shape, "hom basis: modules carry different "
                                    "kinds of action");
  if (m.left && !left)
    throw Error(Error::Kind::Shape, "hom basis: missing left algebra");
  if (m.right && !right)
    throw Error(Error::Kind::Shape, "hom basis: missing right algebra");

  const auto amb = hom_basis(m.carrier, n.carrier);
  if (amb.empty()) return {};

  std::vector<Mat> constraint_cols;
  long rows = 0;
  if (m.right) rows += (long)n.carrier.dim() *
                       m.carrier.tensor(right->carrier).dim();
  if (m.left) rows += (long)n.carrier.dim() *
                      left->carrier.tensor(m.carrier).dim();
  Mat sys(rows, amb.size());
  for (size_t k = 0; k < amb.size(); ++k) {
    long off = 0;
    if (m.right) {
      const Mor ia = Mor::identity(right->carrier);
      Mat r = (amb[k] * *m.right - *n.right * amb[k].tensor(ia)).mat();
      sys.block(off, k, r.size(), 1) = vec_of(r);
      off += r.size();
    }
    if (m.left) {
      const Mor ia = Mor::identity(left->carrier);
      Mat r = (amb[k] * *m.left - *n.left * ia.tensor(amb[k])).mat();
      sys.block(off, k, r.size(), 1) = vec_of(r);
    }
  }
  // when every ambient map already commutes with the actions the stack
  // is rounding dirt, which a relative rank cutoff would misread
  double action_scale = 0.0;
  if (m.right)
    action_scale = std::max(action_scale, m.right->mat().cwiseAbs().maxCoeff());
  if (m.left)
    action_scale = std::max(action_scale, m.left->mat().cwiseAbs().maxCoeff());
  if (rows == 0 || sys.cwiseAbs().maxCoeff() <=
                       1e-11 * (1.0 + action_scale) * double(amb.size()))
    return amb;
  auto sol = solve_linear_subspace(sys, Vec::Zero(rows));
  std::vector<Mor> out;
  for (int j = 0; j < sol.nullspace.cols(); ++j)
    out.push_back(realize_coords(amb, sol.nullspace.col(j)));
  return out;
}

std::vector<Mor> right_module_hom_basis(const Algebra& a,
                                        const ActionModule& m,
                                        const ActionModule& n) {
  return bimodule_hom_basis(m, n, std::nullopt, a);
}

Mor HomAlgebra::realize(const Vec& coords) const {
  if (coords.size() != dim())
    throw Error(Error::Kind::Shape, "realize: coordinate size");
  return realize_coords(basis, coords);
}

Vec HomAlgebra::project(const Mor& f) const {
  Vec out(dim());
  for (int k = 0; k < dim(); ++k) out(k) = frobenius_inner(basis[k], f);
  return out;
}

HomAlgebra end_algebra(const ActionModule& m,
                       const std::optional<Algebra>& left,
                       const std::optional<Algebra>& right) {
  HomAlgebra e;
  e.module = m;
  e.basis = bimodule_hom_basis(m, m, left, right);
  auto sd = structure_of(e.basis);
  e.structure = std::move(sd.coeff);
  e.closure_residual = sd.residual;
  if (!e.basis.empty()) {
    const Mor id = Mor::identity(m.carrier);
    e.identity_coords = e.project(id);
    double idres = mat_dev(e.realize(e.identity_coords).mat(), id.mat());
    if (idres > 1e-8)
      throw Error(Error::Kind::Internal,
                  "end algebra does not contain the identity");
  } else {
    e.identity_coords = Vec();
  }
  return e;
}

std::vector<Mor> semisimple_split(const HomAlgebra& e, uint64_t seed) {
  if (e.dim() == 0) return {};
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Mor> out;
  split_rec(e.basis, e.realize(e.identity_coords), false, rng, out, 0);
  return out;
}

std::vector<Mor> primitive_idempotents(const HomAlgebra& e, uint64_t seed) {
  if (e.dim() == 0) return {};
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Mor> out;
  split_rec(e.basis, e.realize(e.identity_coords), true, rng, out, 0);
  return out;
}

RelativeTensor relative_tensor(const Algebra& a, const ActionModule& x,
                               const ActionModule& y, const Mor& witness,
                               double eps) {
  if (!x.right)
    throw Error(Error::Kind::Shape, "relative tensor: x must be a right "
                                    "module");
  if (!y.left)
    throw Error(Error::Kind::Shape, "relative tensor: y must be a left "
                                    "module");
  const Mor e = witness * a.unit;  // 1 -> A (x) A
  const Mor ix = Mor::identity(x.carrier);
  const Mor iy = Mor::identity(y.carrier);
  const Mor pi = x.right->tensor(*y.left) * ix.tensor(e).tensor(iy);
  const double scale = 1.0 + pi.norm();
  if (mat_dev((pi * pi).mat(), pi.mat()) > eps * scale * scale)
    throw Error(Error::Kind::Domain,
                "relative tensor: witness does not induce an idempotent");
  auto sp = split_idempotent(pi);
  RelativeTensor out{sp.image, sp.v, sp.w};
  // coequalizer: both actions agree after projecting
  const Mor lhs = out.projection * x.right->tensor(iy);
  const Mor rhs = out.projection * ix.tensor(*y.left);
  if (mat_dev(lhs.mat(), rhs.mat()) > eps * (1.0 + lhs.norm()))
    throw Error(Error::Kind::Domain,
                "relative tensor: projection fails the coequalizer law");
  return out;
}

ActionModule dual_module(const Algebra& a, const ActionModule& y,
                         const DualitySolution& yd) {
  if (!y.right)
    throw Error(Error::Kind::Shape, "dual module: right module expected");
  if (yd.obj != y.carrier)
    throw Error(Error::Kind::Shape, "dual module: duality is for a "
                                    "different object");
  const Mor iyb = Mor::identity(yd.dual);
  const Mor ia = Mor::identity(a.carrier);
  Mor l = iyb.tensor(yd.gamma_bar.adjoint()) *
          iyb.tensor(*y.right).tensor(iyb) *
          yd.gamma.tensor(ia).tensor(iyb);
  ActionModule out;
  out.carrier = yd.dual;
  out.left = l;
  return out;
}

// conjugate-equation data for a zero object: every structure map is the
// zero morphism, which satisfies the equations vacuously
static DualitySolution zero_duality(const Obj& x) {
  const Obj u = x.category().unit();
  DualitySolution d;
  d.obj = x;
  d.dual = x.dual();
  d.gamma = Mor::zero(u, d.dual.tensor(x));
  d.gamma_bar = Mor::zero(u, x.tensor(d.dual));
  return d;
}

static DualitySolution duality_of(const Obj& x) {
  return x.is_zero() ? zero_duality(x) : balanced_duality(x);
}

InternalHom internal_hom(const Algebra& a, const ActionModule& x,
                         const ActionModule& y, const Mor& witness) {
  if (!x.right || !y.right)
    throw Error(Error::Kind::Shape, "internal hom: right modules expected");
  InternalHom ih;
  ih.x_carrier = x.carrier;
  ih.y_carrier = y.carrier;
  ih.y_dual = duality_of(y.carrier);
  ActionModule ybar = dual_module(a, y, ih.y_dual);
  ih.rel = relative_tensor(a, x, ybar, witness);
  ih.t_dual = duality_of(ih.rel.object);
  ih.hom = ih.t_dual.dual;

  const Mor ih_id = Mor::identity(ih.hom);
  const Mor ix = Mor::identity(x.carrier);
  const Mor iy = Mor::identity(y.carrier);
  // factored to keep intermediates small: first X -> T (x) Y, then pair
  // the hom object against T
  const Mor k =
      ih.rel.projection.tensor(iy) * ix.tensor(ih.y_dual.gamma);
  ih.ev = ih.t_dual.gamma.adjoint().tensor(iy) * ih_id.tensor(k);
  return ih;
}

Mor internal_hom_adjunct(const InternalHom& ih, const Mor& phi) {
  if (phi.cod() != ih.hom)
    throw Error(Error::Kind::Shape, "adjunct: map must land in the hom "
                                    "object");
  return ih.ev * phi.tensor(Mor::identity(ih.x_carrier));
}

Mor internal_hom_transpose(const InternalHom& ih, const Obj& c,
                           const Mor& psi) {
  if (psi.dom() != c.tensor(ih.x_carrier) || psi.cod() != ih.y_carrier)
    throw Error(Error::Kind::Shape, "transpose: endpoints must be "
                                    "C (x) X -> Y");
  if (ih.hom.dim() == 0) {
    if (psi.norm() > 1e-8)
      throw Error(Error::Kind::NoSolution,
                  "transpose: hom space is zero but the map is not");
    return Mor::zero(c, ih.hom);
  }
  // Closed form: pair psi against the dualities instead of solving a
  // linear system.  With T the relative tensor carrier and w: T -> X (x) Ybar
  // its inclusion,
  //   u   := gammabar_Y^* . (psi (x) 1_Ybar) . (1_C (x) w) : C (x) T -> unit
  //   phi := (u (x) 1_Tbar) . (1_C (x) gammabar_T)         : C -> Tbar.
  // Both steps are evaluated as index contractions so no morphism on a
  // product with a large identity leg is ever materialized.
  const Obj t = ih.rel.object;
  const Obj xyb = ih.rel.inclusion.cod();
  const Obj tbar = ih.hom;
  const Mor v_head =
      ih.y_dual.gamma_bar.adjoint() *
      psi.tensor(Mor::identity(ih.y_dual.dual));  // C (x) X (x) Ybar -> unit
  const Mat& vh = v_head.mat();
  const Mat& w = ih.rel.inclusion.mat();
  const Mat& gbt = ih.t_dual.gamma_bar.mat();
  const Obj ct = c.tensor(t);
  const auto tcj = tensor_pair_table(c, xyb);
  const auto tct = tensor_pair_table(c, t);
  const auto ttb = tensor_pair_table(t, tbar);
  Mat u = Mat::Zero(vh.rows(), ct.dim());
  for (int ci = 0; ci < c.dim(); ++ci)
    for (int ti = 0; ti < t.dim(); ++ti) {
      if (tct(ci, ti) < 0) continue;
      for (int j = 0; j < xyb.dim(); ++j) {
        if (w(j, ti) == 0.0 || tcj(ci, j) < 0) continue;
        u.col(tct(ci, ti)) += vh.col(tcj(ci, j)) * w(j, ti);
      }
    }
  Mat pm = Mat::Zero(tbar.dim(), c.dim());
  for (int ci = 0; ci < c.dim(); ++ci) {
    const int col = c.grade_end(ci);
    for (int tb = 0; tb < tbar.dim(); ++tb) {
      const int row = tbar.grade_start(tb);
      std::complex<double> acc = 0.0;
      for (int ti = 0; ti < t.dim(); ++ti) {
        if (tct(ci, ti) < 0 || ttb(ti, tb) < 0) continue;
        acc += u(row, tct(ci, ti)) * gbt(ttb(ti, tb), col);
      }
      pm(tb, ci) = acc;
    }
  }
  return Mor::checked(c, tbar, pm);
}

InternalHomAlgebra internal_hom_algebra(const Algebra& a,
                                        const ActionModule& x,
                                        const Mor& witness) {
  InternalHomAlgebra out{Algebra{}, internal_hom(a, x, x, witness)};
  const InternalHom& ih = out.hom;
  const Obj hh = ih.hom.tensor(ih.hom);
  const Mor psi_mult = ih.ev * Mor::identity(ih.hom).tensor(ih.ev);
  Mor mult = internal_hom_transpose(ih, hh, psi_mult);
  Mor unit = internal_hom_transpose(ih, ih.hom.category().unit(),
                                    Mor::identity(x.carrier));
  out.algebra = Algebra{ih.hom, mult, unit};
  return out;
}

std::vector<ModuleSummand> decompose_module(
    const Algebra& a, const ActionModule& x,
    const std::optional<Algebra>& left_algebra, uint64_t seed) {
  check_module_shapes(x);
  std::optional<Algebra> left =
      x.left ? std::optional<Algebra>(left_algebra.value_or(a))
             : std::nullopt;
  std::optional<Algebra> right =
      x.right ? std::optional<Algebra>(a) : std::nullopt;
  if (x.carrier.dim() == 0) return {};
  HomAlgebra e = end_algebra(x, left, right);
  auto mins = primitive_idempotents(e, seed);
  std::vector<ModuleSummand> out;
  for (const Mor& q : mins) {
    auto sp = split_idempotent(q);
    ModuleSummand s;
    s.module.carrier = sp.image;
    if (x.right)
      s.module.right =
          sp.v * *x.right * sp.w.tensor(Mor::identity(a.carrier));
    if (x.left)
      s.module.left =
          sp.v * *x.left * Mor::identity(left->carrier).tensor(sp.w);
    s.inclusion = sp.w;
    s.projection = sp.v;
    s.end_dim =
        (int)bimodule_hom_basis(s.module, s.module, left, right).size();
    s.simple = s.end_dim == 1;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace qsf
