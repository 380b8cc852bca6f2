#include "qsf/algebra.hpp"

#include <algorithm>

namespace qsf {

namespace {

double mor_dev(const Mor& a, const Mor& b) {
  const Mat& x = a.mat();
  const Mat& y = b.mat();
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw Error(Error::Kind::Shape, "residual: shape mismatch");
  if (x.size() == 0) return 0.0;
  return (x - y).cwiseAbs().maxCoeff();
}

Report finish(std::vector<CheckItem> checks, double tol) {
  Report r;
  r.checks = std::move(checks);
  r.tolerance = tol;
  r.pass = true;
  for (const auto& c : r.checks)
    if (!(c.residual <= tol)) r.pass = false;
  return r;
}

void check_algebra_shapes(const Algebra& a) {
  const Obj& c = a.carrier;
  if (a.mult.dom() != c.tensor(c) || a.mult.cod() != c)
    throw Error(Error::Kind::Shape, "algebra: multiplication endpoints");
  if (a.unit.dom() != c.category().unit() || a.unit.cod() != c)
    throw Error(Error::Kind::Shape, "algebra: unit endpoints");
}

}  // namespace

double Report::max_residual() const {
  double m = 0.0;
  for (const auto& c : checks) m = std::max(m, c.residual);
  return m;
}

const CheckItem* Report::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

Report verify_algebra(const Algebra& a, double tol) {
  check_algebra_shapes(a);
  const Mor id = Mor::identity(a.carrier);
  const Mor& m = a.mult;
  std::vector<CheckItem> checks;
  checks.push_back({"associativity",
                    mor_dev(compose_right_leg(m, m, a.carrier),
                            compose_left_leg(m, a.carrier, m))});
  checks.push_back({"unit_left", mor_dev(m * a.unit.tensor(id), id)});
  checks.push_back({"unit_right", mor_dev(m * id.tensor(a.unit), id)});
  return finish(std::move(checks), tol);
}

Report verify_cstar_frobenius(const Algebra& a, double tol) {
  Report base = verify_algebra(a, tol);
  const Mor id = Mor::identity(a.carrier);
  const Mor& m = a.mult;
  const Mor ms = m.adjoint();
  const Mor mid = ms * m;
  auto checks = base.checks;
  checks.push_back(
      {"frobenius_left", mor_dev(m.tensor(id) * id.tensor(ms), mid)});
  checks.push_back(
      {"frobenius_right", mor_dev(id.tensor(m) * ms.tensor(id), mid)});
  return finish(std::move(checks), tol);
}

Report is_special(const Algebra& a, double tol) {
  check_algebra_shapes(a);
  const Mor id = Mor::identity(a.carrier);
  std::vector<CheckItem> checks;
  checks.push_back({"speciality", mor_dev(a.mult * a.mult.adjoint(), id)});
  return finish(std::move(checks), tol);
}

Report verify_frobenius(const Algebra& a, const FrobeniusStructure& fs,
                        double tol) {
  check_algebra_shapes(a);
  const Obj& c = a.carrier;
  if (fs.comult.dom() != c || fs.comult.cod() != c.tensor(c))
    throw Error(Error::Kind::Shape, "frobenius: comultiplication endpoints");
  if (fs.counit.dom() != c || fs.counit.cod() != c.category().unit())
    throw Error(Error::Kind::Shape, "frobenius: counit endpoints");
  const Mor id = Mor::identity(c);
  const Mor& m = a.mult;
  const Mor& d = fs.comult;
  std::vector<CheckItem> checks;
  checks.push_back(
      {"coassociativity", mor_dev(d.tensor(id) * d, id.tensor(d) * d)});
  checks.push_back({"counit_left", mor_dev(fs.counit.tensor(id) * d, id)});
  checks.push_back({"counit_right", mor_dev(id.tensor(fs.counit) * d, id)});
  const Mor dm = d * m;
  checks.push_back(
      {"frobenius_left", mor_dev(m.tensor(id) * id.tensor(d), dm)});
  checks.push_back(
      {"frobenius_right", mor_dev(id.tensor(m) * d.tensor(id), dm)});
  return finish(std::move(checks), tol);
}

Report verify_action(const Algebra& a, const ActionModule& x, double tol) {
  check_algebra_shapes(a);
  if (!x.left && !x.right)
    throw Error(Error::Kind::Shape, "action: no action present");
  const Obj& ac = a.carrier;
  const Obj& xc = x.carrier;
  const Mor ida = Mor::identity(ac);
  const Mor idx = Mor::identity(xc);
  std::vector<CheckItem> checks;
  if (x.right) {
    const Mor& r = *x.right;
    if (r.dom() != xc.tensor(ac) || r.cod() != xc)
      throw Error(Error::Kind::Shape, "action: right action endpoints");
    checks.push_back(
        {"right_assoc", mor_dev(r * r.tensor(ida), r * idx.tensor(a.mult))});
    checks.push_back({"right_unit", mor_dev(r * idx.tensor(a.unit), idx)});
  }
  if (x.left) {
    const Mor& l = *x.left;
    if (l.dom() != ac.tensor(xc) || l.cod() != xc)
      throw Error(Error::Kind::Shape, "action: left action endpoints");
    checks.push_back(
        {"left_assoc", mor_dev(l * ida.tensor(l), l * a.mult.tensor(idx))});
    checks.push_back({"left_unit", mor_dev(l * a.unit.tensor(idx), idx)});
  }
  if (x.left && x.right) {
    checks.push_back({"bimodule_commute",
                      mor_dev(*x.right * x.left->tensor(ida),
                              *x.left * ida.tensor(*x.right))});
  }
  return finish(std::move(checks), tol);
}

Mor separability_witness(const Algebra& a, double rank_eps) {
  check_algebra_shapes(a);
  const Obj& c = a.carrier;
  const Obj cc = c.tensor(c);
  // Any bimodule splitting f restricts to z = f unit with
  //   (m(x)1)(1(x)z) = (1(x)m)(z(x)1)   and   m z = unit,
  // and any such z gives back the splitting f = (m(x)1)(1(x)z):
  // m f = 1 follows from m z = unit, the left module law from
  // associativity alone, and the right module law from the
  // centralizing equation.  Solving for z instead of f shrinks the
  // unknowns from dim Hom(A, A(x)A) to dim Hom(1, A(x)A).
  const auto basis = hom_basis(c.category().unit(), cc);
  if (basis.empty())
    throw Error(Error::Kind::NoSolution,
                "separability: Hom(1, A(x)A) is zero");
  const Mor id = Mor::identity(c);
  const Mor& m = a.mult;

  const int d = c.dim();
  const int dd = cc.dim();
  const int du = c.category().unit().dim();
  const long rows1 = (long)dd * d, rows2 = (long)d * du;
  Mat sys(rows1 + rows2, basis.size());
  Vec rhs = Vec::Zero(rows1 + rows2);
  for (size_t b = 0; b < basis.size(); ++b) {
    const Mor& z = basis[b];
    Mat r1 = (m.tensor(id) * id.tensor(z) - id.tensor(m) * z.tensor(id)).mat();
    Mat r2 = (m * z).mat();
    sys.block(0, b, rows1, 1) = Eigen::Map<Vec>(r1.data(), rows1);
    sys.block(rows1, b, rows2, 1) = Eigen::Map<Vec>(r2.data(), rows2);
  }
  Mat un = a.unit.mat();
  rhs.segment(rows1, rows2) = Eigen::Map<Vec>(un.data(), rows2);

  LinearSolution sol;
  try {
    sol = solve_linear_subspace(sys, rhs, rank_eps);
  } catch (const Error& e) {
    if (e.kind == Error::Kind::NoSolution)
      throw Error(Error::Kind::NoSolution, "separability: no witness");
    throw;
  }
  // the hom basis is orthonormal, so the minimum-norm coefficient
  // vector is the minimum-norm z
  Mor z = Mor::zero(c.category().unit(), cc);
  for (size_t b = 0; b < basis.size(); ++b)
    z = z + sol.particular(b) * basis[b];
  return m.tensor(id) * id.tensor(z);
}

Connectivity is_connected(const Algebra& a) {
  check_algebra_shapes(a);
  const auto basis = hom_basis(a.carrier.category().unit(), a.carrier);
  Connectivity out;
  out.hom_dim = (int)basis.size();
  out.connected = out.hom_dim == 1;
  return out;
}

int support_block(const Algebra& a, double tol) {
  check_algebra_shapes(a);
  if (a.carrier.backend() != Backend::GridHilb)
    throw Error(Error::Kind::Domain, "support_block: grid categories only");
  const Eigen::MatrixXi dims = a.carrier.dims_grid();
  const int n = dims.rows();
  // diagonal cells carrying a component of the unit element
  std::vector<int> hits;
  for (int i = 0; i < n; ++i)
    if (a.unit.mat().col(i).norm() > tol) hits.push_back(i);
  if (hits.size() >= 2)
    throw Error(Error::Kind::Domain,
                "support_block: unit meets several diagonal cells, "
                "algebra is not connected");
  if (hits.empty())
    throw Error(Error::Kind::Domain, "support_block: unit has no support");
  const int j = hits[0];
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if ((i != j || k != j) && dims(i, k) != 0)
        throw Error(Error::Kind::Domain,
                    "support_block: carrier leaves the diagonal cell");
  return j;
}

TransportedAlgebra transport_algebra(const Algebra& a, const Mor& t) {
  check_algebra_shapes(a);
  if (t.dom() != a.carrier)
    throw Error(Error::Kind::Shape, "transport: t must start at the carrier");
  if (t.mat().rows() != t.mat().cols())
    throw Error(Error::Kind::NotInvertible, "transport: t is not square");
  Eigen::JacobiSVD<Mat> svd(t.mat(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12 * sv(0) || sv(0) == 0.0)
    throw Error(Error::Kind::NotInvertible, "transport: t is singular");
  Mat inv = svd.matrixV() *
            sv.cwiseInverse().asDiagonal().toDenseMatrix().cast<cplx>() *
            svd.matrixU().adjoint();
  Mor tinv(t.cod(), t.dom(), inv);
  const Mor titi = tinv.tensor(tinv);
  Mor mt = t * (a.mult * titi);
  // refine the transported product against its defining identity
  // mt (t (x) t) = t m; one correction step removes the rounding error
  // amplified by the conditioning of t, which otherwise dominates the
  // residual of the returned isomorphism for stiff transports
  const Mor tt = t.tensor(t);
  const Mor tm = t * a.mult;
  for (int it = 0; it < 2; ++it) mt = mt + (tm - mt * tt) * titi;
  TransportedAlgebra out{{t.cod(), mt, t * a.unit}, t};
  return out;
}

Algebra algebra_from_left_mult(const Obj& x,
                               const std::vector<Mat>& left_mult,
                               const Vec& unit_coords) {
  const int d = x.dim();
  if ((int)left_mult.size() != d || unit_coords.size() != d)
    throw Error(Error::Kind::Shape, "algebra builder: size mismatch");
  for (const Mat& c : left_mult)
    if (c.rows() != d || c.cols() != d)
      throw Error(Error::Kind::Shape, "algebra builder: bad table shape");

  const Obj xx = x.tensor(x);
  const Eigen::MatrixXi pairs = tensor_pair_table(x, x);
  Mat m = Mat::Zero(d, xx.dim());
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const int col = pairs(a, b);
      if (col >= 0) {
        m.col(col) = left_mult[a].col(b);
      } else if (left_mult[a].col(b).norm() > 0) {
        throw Error(Error::Kind::Domain,
                    "algebra builder: product assigned to an impossible "
                    "basis pair");
      }
    }

  const Obj one = x.category().unit();
  Mat u = Mat::Zero(d, one.dim());
  if (x.backend() == Backend::RepG) {
    u.col(0) = unit_coords;
  } else {
    for (int k = 0; k < d; ++k) {
      const int gs = x.grade_start(k), ge = x.grade_end(k);
      if (gs == ge) {
        u(k, gs) = unit_coords(k);
      } else if (std::abs(unit_coords(k)) > 0) {
        throw Error(Error::Kind::Domain,
                    "algebra builder: identity element off the diagonal");
      }
    }
  }
  return Algebra{x, Mor(xx, x, std::move(m)), Mor(one, x, std::move(u))};
}

Algebra pointwise_algebra(const Obj& x) {
  const int d = x.dim();
  std::vector<Mat> lm(d, Mat::Zero(d, d));
  for (int a = 0; a < d; ++a) lm[a](a, a) = 1.0;
  return algebra_from_left_mult(x, lm, Vec::Ones(d));
}

Algebra matrix_algebra(const Obj& x, int n, double scale) {
  const int d = x.dim();
  if (d != n * n)
    throw Error(Error::Kind::Shape, "matrix algebra: carrier must be n^2");
  std::vector<Mat> lm(d, Mat::Zero(d, d));
  // e_{ij} e_{kl} = delta_{jk} e_{il}, basis index row-major
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        lm[i * n + j](i * n + l, j * n + l) = scale;
  Vec u = Vec::Zero(d);
  for (int i = 0; i < n; ++i) u(i * n + i) = 1.0 / scale;
  return algebra_from_left_mult(x, lm, u);
}

Algebra group_algebra(const Obj& x, const GroupTable& g) {
  const int d = x.dim();
  if (d != g.order())
    throw Error(Error::Kind::Shape, "group algebra: carrier must be |G|");
  std::vector<Mat> lm(d, Mat::Zero(d, d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) lm[a](g.mult[a][b], b) = 1.0;
  Vec u = Vec::Zero(d);
  u(g.identity) = 1.0;
  return algebra_from_left_mult(x, lm, u);
}

Algebra dual_numbers_algebra(const Obj& x) {
  if (x.dim() != 2)
    throw Error(Error::Kind::Shape, "dual numbers: carrier must be 2-dim");
  std::vector<Mat> lm(2, Mat::Zero(2, 2));
  lm[0] = Mat::Identity(2, 2);  // 1 * e_b = e_b
  lm[1](1, 0) = 1.0;            // x * 1 = x, x * x = 0
  Vec u(2);
  u << 1.0, 0.0;
  return algebra_from_left_mult(x, lm, u);
}

Algebra algebra_direct_sum(const Algebra& a, const Algebra& b) {
  check_algebra_shapes(a);
  check_algebra_shapes(b);
  auto ds = direct_sum({a.carrier, b.carrier});
  const Mor& ja = ds.injections[0];
  const Mor& jb = ds.injections[1];
  const Mor pa = ja.adjoint(), pb = jb.adjoint();
  Mor mult = ja * a.mult * pa.tensor(pa) + jb * b.mult * pb.tensor(pb);
  Mor unit = ja * a.unit + jb * b.unit;
  return Algebra{ds.total, mult, unit};
}

}  // namespace qsf
