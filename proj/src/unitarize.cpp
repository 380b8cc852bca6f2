#include "qsf/unitarize.hpp"

#include "qsf/digest.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

namespace qsf {

namespace {

double dev(const Mor& a, const Mor& b) {
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

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Positive square root and inverse square root of r r* in one
// eigendecomposition; rejects numerically singular actions.
struct PositivePart {
  Mat sqrt;
  Mat inv_sqrt;
};

PositivePart positive_split(const Mat& gram, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  if (es.info() != Eigen::Success)
    throw Error(Error::Kind::Solver, std::string(what) + ": eigensolver failed");
  const RealVec& ev = es.eigenvalues();
  const double top = ev.size() ? ev(ev.size() - 1) : 0.0;
  if (top <= 0.0 || ev(0) <= 1e-12 * top)
    throw Error(Error::Kind::NotInvertible,
                std::string(what) + ": operator is numerically singular");
  RealVec rt = ev.cwiseSqrt();
  Mat u = es.eigenvectors();
  PositivePart out;
  out.sqrt = u * rt.asDiagonal() * u.adjoint();
  out.inv_sqrt = u * rt.cwiseInverse().asDiagonal() * u.adjoint();
  return out;
}

}  // namespace

TransportedAlgebra specialize(const Algebra& a) {
  Report pre = verify_cstar_frobenius(a);
  if (!pre.pass)
    throw Error(Error::Kind::Domain,
                "specialize: input fails the adjoint-Frobenius laws (worst "
                "residual " +
                    fmt(pre.max_residual()) + ")");
  const Mor id = Mor::identity(a.carrier);
  const Mor c = a.mult * a.mult.adjoint();
  // the square root of m m* can only be transported through the product
  // if m m* commutes with multiplication on both sides
  const double bimod = std::max(dev(c * a.mult, a.mult * c.tensor(id)),
                                dev(c * a.mult, a.mult * id.tensor(c)));
  if (bimod > Tolerance{}.verify_eps * (1.0 + c.norm()))
    throw Error(Error::Kind::Domain,
                "specialize: m m* does not commute with the multiplication "
                "(residual " +
                    fmt(bimod) + ")");
  const Mor u = Mor::checked(a.carrier, a.carrier, hermitian_sqrt(c.mat()));
  TransportedAlgebra out = transport_algebra(a, u);
  Report sp = is_special(out.algebra, Tolerance{}.solver_eps);
  if (!sp.pass)
    throw Error(Error::Kind::Internal,
                "specialize: rescaled product is not a coisometry (residual " +
                    fmt(sp.max_residual()) + ")");
  return out;
}

ModuleUnitarization unitarize_module(const Algebra& q, const ActionModule& x) {
  Report sp = is_special(q);
  if (!sp.pass)
    throw Error(Error::Kind::Domain,
                "unitarize_module: the algebra product must be a coisometry "
                "(residual " +
                    fmt(sp.max_residual()) + ")");
  if (!x.right)
    throw Error(Error::Kind::Shape, "unitarize_module: right action required");
  const Mor& r = *x.right;
  if (r.dom() != x.carrier.tensor(q.carrier) || r.cod() != x.carrier)
    throw Error(Error::Kind::Shape, "unitarize_module: action endpoints");

  PositivePart h = positive_split((r * r.adjoint()).mat(),
                                  "unitarize_module: r r*");
  const Mor hm = Mor::checked(x.carrier, x.carrier, h.sqrt);
  const Mor hi = Mor::checked(x.carrier, x.carrier, h.inv_sqrt);
  const Mor ida = Mor::identity(q.carrier);

  ModuleUnitarization out;
  out.h = hm;
  out.h_inv = hi;
  out.module.carrier = x.carrier;
  out.module.right = hi * r * hm.tensor(ida);
  // a coexisting left action rides along under the same conjugation, so
  // h^-1 stays a two-sided module map
  if (x.left) out.module.left = hi * (*x.left) * ida.tensor(hm);
  return out;
}

namespace {

void split_into_summands(const Algebra& b, const Mor& v_acc, const Mor& w_acc,
                         uint64_t seed, int depth,
                         std::vector<AlgebraSummand>& out) {
  if (depth > 16)
    throw Error(Error::Kind::Internal,
                "decompose_algebra: splitting fails to terminate");
  ActionModule reg{b.carrier, b.mult, b.mult};
  HomAlgebra e = end_algebra(reg, b, b);
  if (e.dim() <= 1) {
    out.push_back({b, v_acc, w_acc});
    return;
  }
  for (const Mor& p : semisimple_split(e, seed)) {
    MorSplit sp = split_idempotent(p);
    Algebra bk{sp.image, sp.v * b.mult * sp.w.tensor(sp.w), sp.v * b.unit};
    split_into_summands(bk, sp.v * v_acc, w_acc * sp.w, seed, depth + 1, out);
  }
}

}  // namespace

std::vector<AlgebraSummand> decompose_algebra(const Algebra& a,
                                              uint64_t seed) {
  Report alg = verify_algebra(a);
  if (!alg.pass)
    throw Error(Error::Kind::Domain,
                "decompose_algebra: input fails the algebra laws (worst "
                "residual " +
                    fmt(alg.max_residual()) + ")");
  separability_witness(a);
  std::vector<AlgebraSummand> out;
  const Mor id = Mor::identity(a.carrier);
  split_into_summands(a, id, id, seed, 0, out);
  return out;
}

FrobeniusPromotion frobenius_promotion(const Algebra& a) {
  Report alg = verify_algebra(a);
  if (!alg.pass)
    throw Error(Error::Kind::Domain,
                "frobenius_promotion: input fails the algebra laws");
  Connectivity conn = is_connected(a);
  if (!conn.connected)
    throw Error(Error::Kind::Domain,
                "frobenius_promotion: maps from the unit object form a " +
                    std::to_string(conn.hom_dim) + "-dimensional space, need 1");
  separability_witness(a);

  const Obj& c = a.carrier;
  const DualitySolution dd = balanced_duality(c);
  const Mor idc = Mor::identity(c);
  const Mor idd = Mor::identity(dd.dual);

  // pairing the product against the unit gives a map onto the dual
  const Mor f =
      (a.unit.adjoint() * a.mult).tensor(idd) * idc.tensor(dd.gamma_bar);

  Eigen::JacobiSVD<Mat> svd(f.mat());
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * (1.0 + sv(0)))
    throw Error(Error::Kind::Internal,
                "frobenius_promotion: pairing map is numerically singular "
                "(smallest singular value " +
                    fmt(sv.size() ? sv(sv.size() - 1) : 0.0) + ")");

  // right action on the dual carrier transposing left multiplication
  const Mor rdual = dd.gamma.adjoint().tensor(idd) *
                    idd.tensor(a.mult).tensor(idd) *
                    idd.tensor(idc).tensor(dd.gamma_bar);
  const double modres = dev(f * a.mult, rdual * f.tensor(idc));
  if (modres > Tolerance{}.solver_eps * (1.0 + f.norm()))
    throw Error(Error::Kind::Internal,
                "frobenius_promotion: pairing map fails the module law "
                "(residual " +
                    fmt(modres) + ")");

  const Mor counit = dd.gamma.adjoint() * f.tensor(a.unit);

  // comultiplication from the counit and Frobenius laws, solved over the
  // morphism space of the square
  const Obj cc = c.tensor(c);
  const auto basis = hom_basis(c, cc);
  const int d = c.dim();
  const long r1 = (long)d * d, r2 = (long)cc.dim() * cc.dim();
  Mat sys(2 * r1 + 2 * r2, (long)basis.size());
  Vec rhs = Vec::Zero(2 * r1 + 2 * r2);
  for (size_t j = 0; j < basis.size(); ++j) {
    const Mor& delta = basis[j];
    Mat m1 = (counit.tensor(idc) * delta).mat();
    Mat m2 = (idc.tensor(counit) * delta).mat();
    Mat m3 = (a.mult.tensor(idc) * idc.tensor(delta) - delta * a.mult).mat();
    Mat m4 = (idc.tensor(a.mult) * delta.tensor(idc) - delta * a.mult).mat();
    sys.block(0, j, r1, 1) = Eigen::Map<Vec>(m1.data(), r1);
    sys.block(r1, j, r1, 1) = Eigen::Map<Vec>(m2.data(), r1);
    sys.block(2 * r1, j, r2, 1) = Eigen::Map<Vec>(m3.data(), r2);
    sys.block(2 * r1 + r2, j, r2, 1) = Eigen::Map<Vec>(m4.data(), r2);
  }
  Mat eye = Mat::Identity(d, d);
  rhs.segment(0, r1) = Eigen::Map<Vec>(eye.data(), r1);
  rhs.segment(r1, r1) = Eigen::Map<Vec>(eye.data(), r1);

  LinearSolution sol;
  try {
    sol = solve_linear_subspace(sys, rhs);
  } catch (const Error& e) {
    if (e.kind == Error::Kind::NoSolution)
      throw Error(Error::Kind::Internal,
                  "frobenius_promotion: comultiplication system is "
                  "inconsistent despite an invertible pairing");
    throw;
  }
  Mor comult = Mor::zero(c, cc);
  for (size_t j = 0; j < basis.size(); ++j)
    comult = comult + sol.particular(j) * basis[j];

  FrobeniusPromotion out{{comult, counit}, f};
  Report fr = verify_frobenius(a, out.structure, Tolerance{}.solver_eps);
  if (!fr.pass)
    throw Error(Error::Kind::Internal,
                "frobenius_promotion: solved structure fails verification "
                "(worst residual " +
                    fmt(fr.max_residual()) + ")");
  return out;
}

namespace {

// Real-orthonormal basis of the hermitian endomorphisms, spanning the
// same space as the complex hom basis (which is closed under adjoints).
std::vector<Mat> hermitian_endo_basis(const Obj& x) {
  const auto hb = hom_basis(x, x);
  std::vector<Mat> cand;
  cand.reserve(2 * hb.size());
  for (const Mor& f : hb) {
    cand.push_back(0.5 * (f.mat() + Mat(f.mat().adjoint())));
    cand.push_back(cplx(0.0, -0.5) * (f.mat() - Mat(f.mat().adjoint())));
  }
  std::vector<Mat> out;
  for (Mat& c : cand) {
    for (const Mat& e : out) {
      const double coef = (e.adjoint() * c).trace().real();
      c -= coef * e;
    }
    const double n = std::sqrt((c.adjoint() * c).trace().real());
    if (n > 1e-9) out.push_back(c / n);
  }
  if (out.size() != hb.size())
    throw Error(Error::Kind::Internal,
                "unitarize: endomorphism space is not adjoint-closed");
  return out;
}

struct DefectContext {
  const std::vector<Mat>* basis = nullptr;
  Mat mdense;  // product table gathered into the dense pair layout
  int d = 0;
  long len = 0;
  // workspace reused across evaluations; the residual function sits
  // inside a numeric jacobian loop, so per-call allocations add up
  Mat tinv, w, half, sandwich, p, mf, r1, mid, slice, block;

  void prepare(int dim) {
    d = dim;
    const long d2 = (long)d * d;
    len = 2 * (d2 + 2 * d2 * d2);
    tinv.resize(d, d);
    w.resize(d, d);
    half.resize(d, d);
    sandwich.resize(d, d);
    p.resize(d, d2);
    mf.resize(d, d2);
    r1.resize(d, d);
    mid.resize(d2, d2);
    slice.resize(d, d);
    block.resize(d, d);
  }
};

Mat combine(const DefectContext& ctx, const RealVec& coords) {
  Mat t = Mat::Zero(ctx.d, ctx.d);
  for (Eigen::Index j = 0; j < coords.size(); ++j)
    t += coords(j) * (*ctx.basis)[(size_t)j];
  return t;
}

// Defect of the transported product: distance of m_t m_t* from the
// identity plus both adjoint-Frobenius defects.  Everything works in
// the dense pair layout (absent grade pairs padded with zero), which
// keeps the cost at d^5 instead of the d^7 of composing with tensored
// identities, and the contraction against t^-1 (x) t^-1 is done one
// row at a time, so the d^2 x d^2 Kronecker factor never materializes.
RealVec transport_defect(DefectContext& ctx, const Mat& t) {
  const int d = ctx.d;
  // t stays hermitian along the whole search, so its spectrum both
  // certifies invertibility and inverts it
  Eigen::SelfAdjointEigenSolver<Mat> es(t);
  if (es.info() != Eigen::Success) return RealVec::Constant(ctx.len, 1e6);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  const double hi = ev.maxCoeff();
  if (!(hi > 0.0) || !std::isfinite(hi) || ev.minCoeff() <= 1e-12 * hi)
    return RealVec::Constant(ctx.len, 1e6);
  ctx.w = es.eigenvectors();
  for (int j = 0; j < d; ++j) ctx.w.col(j) /= es.eigenvalues()(j);
  ctx.tinv.noalias() = ctx.w * es.eigenvectors().adjoint();

  // m_t(z, (x,y)) = sum_w t(z, w) sum_{a,b} M(w, (a,b)) ti(a,x) ti(b,y)
  for (int z = 0; z < d; ++z) {
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) ctx.w(a, b) = ctx.mdense(z, (long)a * d + b);
    ctx.half.noalias() = ctx.tinv.transpose() * ctx.w;
    ctx.sandwich.noalias() = ctx.half * ctx.tinv;
    for (int x = 0; x < d; ++x)
      for (int y = 0; y < d; ++y)
        ctx.p(z, (long)x * d + y) = ctx.sandwich(x, y);
  }
  ctx.mf.noalias() = t * ctx.p;
  const Mat& mf = ctx.mf;

  RealVec out(ctx.len);
  long pos = 0;
  auto push = [&](cplx v) {
    out(pos++) = v.real();
    out(pos++) = v.imag();
  };

  ctx.r1.noalias() = mf * mf.adjoint();
  ctx.r1.diagonal().array() -= 1.0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) push(ctx.r1(i, j));

  ctx.mid.noalias() = mf.adjoint() * mf;
  const Mat& mid = ctx.mid;
  Mat& slice = ctx.slice;
  Mat& block = ctx.block;
  // (m_t (x) 1)(1 (x) m_t*) against m_t* m_t
  for (int x = 0; x < d; ++x) {
    const auto ax = mf.middleCols((long)x * d, d);
    for (int c = 0; c < d; ++c) {
      for (int b = 0; b < d; ++b)
        slice.row(b) = mf.col((long)b * d + c).adjoint();
      block.noalias() = ax * slice;
      for (int z = 0; z < d; ++z)
        for (int y = 0; y < d; ++y)
          push(block(z, y) - mid((long)z * d + c, (long)x * d + y));
    }
  }
  // (1 (x) m_t)(m_t* (x) 1) against m_t* m_t
  for (int z = 0; z < d; ++z) {
    const Mat pz = mf.middleCols((long)z * d, d).adjoint();
    for (int y = 0; y < d; ++y) {
      for (int b = 0; b < d; ++b) slice.col(b) = mf.col((long)b * d + y);
      block.noalias() = slice * pz;
      for (int c = 0; c < d; ++c)
        for (int x = 0; x < d; ++x)
          push(block(c, x) - mid((long)z * d + c, (long)x * d + y));
    }
  }
  return out;
}

// Exact transport for a full matrix block.  When every linear map on
// the carrier is a morphism and the algebra is an indecomposable
// matrix algebra M_n (so dim = n^2), an explicit isomorphism phi onto
// M_n comes from splitting off a primitive idempotent: the left module
// A p is the simple module, and phi is left multiplication restricted
// to it.  The positive polar factor of phi scaled by sqrt(n) then
// carries the product onto the standard coisometric form, so the
// search starts at the solution instead of walking to it.
std::optional<Mat> matrix_block_transport(const Mat& md, const Vec& unit_coords,
                                          int d, uint64_t seed) {
  const int n = (int)std::lround(std::sqrt((double)d));
  if (n * n != d) return std::nullopt;
  if (n == 1) {
    const double s = std::abs(md(0, 0));
    if (!(s > 0.0) || !std::isfinite(s)) return std::nullopt;
    return Mat::Constant(1, 1, s);
  }
  auto mul = [&](const Vec& u, const Vec& v) {
    Vec out = Vec::Zero(d);
    for (int z = 0; z < d; ++z) {
      cplx acc = 0.0;
      for (int x = 0; x < d; ++x)
        for (int y = 0; y < d; ++y)
          acc += md(z, (long)x * d + y) * u(x) * v(y);
      out(z) = acc;
    }
    return out;
  };
  std::mt19937_64 rng(seed ^ 0x1db3a5f7c2e49b61ULL);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int attempt = 0; attempt < 3; ++attempt) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = cplx(g(rng), g(rng));
    // left multiplication by x carries the n matrix eigenvalues of x,
    // each with multiplicity n
    Mat lx = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int z = 0; z < d; ++z)
        for (int y = 0; y < d; ++y) lx(z, y) += x(i) * md(z, (long)i * d + y);
    Eigen::ComplexEigenSolver<Mat> ces(lx);
    if (ces.info() != Eigen::Success) continue;
    const Vec ev = ces.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    const double thr = 1e-6 * (1.0 + scale);
    std::vector<int> assigned(d, -1);
    std::vector<cplx> centers;
    std::vector<int> sizes;
    for (int i = 0; i < d; ++i) {
      if (assigned[i] >= 0) continue;
      const int c = (int)centers.size();
      cplx sum = 0.0;
      int cnt = 0;
      for (int j = 0; j < d; ++j)
        if (assigned[j] < 0 && std::abs(ev(j) - ev(i)) < thr) {
          assigned[j] = c;
          sum += ev(j);
          ++cnt;
        }
      centers.push_back(sum / (double)cnt);
      sizes.push_back(cnt);
    }
    if ((int)centers.size() != n) continue;
    bool even = true;
    for (int s : sizes) even = even && s == n;
    if (!even) continue;

    // primitive idempotent: the spectral projector of x at the first
    // eigenvalue, evaluated as a polynomial inside the algebra
    Vec p = unit_coords;
    for (size_t j = 1; j < centers.size(); ++j)
      p = mul(p, (x - centers[j] * unit_coords).eval()) /
          (centers[0] - centers[j]);
    // one idempotent polish round tightens the spectral split
    const Vec p2 = mul(p, p);
    p = 3.0 * p2 - 2.0 * mul(p2, p);

    // orthonormal basis of the simple left module A p
    Mat rp(d, d);
    for (int z = 0; z < d; ++z)
      for (int xx = 0; xx < d; ++xx) {
        cplx acc = 0.0;
        for (int b = 0; b < d; ++b) acc += md(z, (long)xx * d + b) * p(b);
        rp(z, xx) = acc;
      }
    Eigen::JacobiSVD<Mat> svd(rp, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    if (!(sv(n - 1) > 1e-8 * sv(0)) || sv(n) > 1e-6 * sv(0)) continue;
    const Mat v = svd.matrixU().leftCols(n);

    Mat phi(d, d);
    for (int i = 0; i < d; ++i) {
      Mat li(d, d);
      for (int z = 0; z < d; ++z)
        for (int y = 0; y < d; ++y) li(z, y) = md(z, (long)i * d + y);
      const Mat block = v.adjoint() * li * v;
      for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) phi((long)c * n + r, i) = block(r, c);
    }
    Eigen::JacobiSVD<Mat> psvd(phi);
    const auto& ps = psvd.singularValues();
    if (!(ps(d - 1) > 1e-10 * ps(0))) continue;
    return std::sqrt((double)n) *
           hermitian_sqrt((phi.adjoint() * phi).eval());
  }
  return std::nullopt;
}

SolverStats stats_of(uint64_t seed, const SolverResult& res) {
  SolverStats s;
  s.seed = seed;
  s.restarts = res.restarts_used;
  s.iterations = res.iterations;
  s.residual = res.residual;
  return s;
}

}  // namespace

SpecialUnitarization solver_unitarize(const Algebra& a, uint64_t seed,
                                      int max_iterations, int restarts) {
  Report alg = verify_algebra(a);
  if (!alg.pass)
    throw Error(Error::Kind::Domain,
                "unitarize: input fails the algebra laws (worst residual " +
                    fmt(alg.max_residual()) + ")");
  separability_witness(a);

  const double quick_eps = Tolerance{}.verify_eps;
  Report sp = is_special(a, quick_eps);
  Report cf = verify_cstar_frobenius(a, quick_eps);
  if (sp.pass && cf.pass) {
    SpecialUnitarization out{a, Mor::identity(a.carrier), {}};
    out.stats.seed = seed;
    out.stats.residual = std::max(sp.max_residual(), cf.max_residual());
    return out;
  }

  DefectContext ctx;
  const auto basis = hermitian_endo_basis(a.carrier);
  ctx.basis = &basis;
  ctx.prepare(a.carrier.dim());
  const Eigen::MatrixXi tab = tensor_pair_table(a.carrier, a.carrier);
  ctx.mdense = Mat::Zero(ctx.d, (long)ctx.d * ctx.d);
  const Mat& mm = a.mult.mat();
  for (int x = 0; x < ctx.d; ++x)
    for (int b = 0; b < ctx.d; ++b) {
      const int col = tab(x, b);
      if (col >= 0) ctx.mdense.col((long)x * ctx.d + b) = mm.col(col);
    }

  // start from the positive square root of the left regular Gram
  // operator; a hermitian solution always exists because the positive
  // polar factor of any solution is again a solution
  const Mat t0 = hermitian_sqrt((a.mult * a.mult.adjoint()).mat());
  RealVec init(basis.size());
  for (size_t j = 0; j < basis.size(); ++j)
    init((Eigen::Index)j) = (basis[j].adjoint() * t0).trace().real();

  SolverOptions opts;
  opts.max_iterations = max_iterations;
  opts.restarts = restarts;
  opts.target = Tolerance{}.solver_eps;
  opts.seed = seed;
  auto fn = [&ctx](const RealVec& coords) {
    return transport_defect(ctx, combine(ctx, coords));
  };
  // when the endomorphism space is unconstrained, try the direct
  // matrix-block construction and keep whichever start is closer
  if ((long)basis.size() == (long)ctx.d * ctx.d) {
    const Vec ucoord = a.unit.mat().rowwise().sum();
    if (auto ts = matrix_block_transport(ctx.mdense, ucoord, ctx.d, seed)) {
      RealVec alt(basis.size());
      for (size_t j = 0; j < basis.size(); ++j)
        alt((Eigen::Index)j) = (basis[j].adjoint() * *ts).trace().real();
      if (fn(alt).norm() < fn(init).norm()) init = alt;
    }
  }
  SolverResult res = minimize_defect(fn, init, opts);
  if (!res.success)
    throw Error(Error::Kind::Solver,
                "unitarize: defect search stalled at residual " +
                    fmt(res.residual) + " after " +
                    std::to_string(res.restarts_used) + " restarts");

  // gauge: replace t by its positive polar factor, the canonical
  // representative on the unitary orbit of solutions
  const Mat traw = combine(ctx, res.params);
  const Mat tpos = hermitian_sqrt((traw.adjoint() * traw).eval());
  const Mor t = Mor::checked(a.carrier, a.carrier, tpos, 1e-8);
  TransportedAlgebra moved = transport_algebra(a, t);

  Report osp = is_special(moved.algebra, Tolerance{}.solver_eps);
  Report ocf = verify_cstar_frobenius(moved.algebra, Tolerance{}.solver_eps);
  if (!osp.pass || !ocf.pass)
    throw Error(Error::Kind::Solver,
                "unitarize: gauge-fixed transport misses the tolerance "
                "(residuals " +
                    fmt(osp.max_residual()) + ", " + fmt(ocf.max_residual()) +
                    ")");
  SpecialUnitarization out{moved.algebra, t, stats_of(seed, res)};
  out.stats.residual = std::max(osp.max_residual(), ocf.max_residual());
  return out;
}

SpecialUnitarization connected_unitarize(const Algebra& a, uint64_t seed,
                                         int max_iterations, int restarts) {
  Connectivity conn = is_connected(a);
  if (!conn.connected)
    throw Error(Error::Kind::Domain,
                "connected_unitarize: maps from the unit object form a " +
                    std::to_string(conn.hom_dim) +
                    "-dimensional space, need 1");
  return solver_unitarize(a, seed, max_iterations, restarts);
}

std::string algebra_fingerprint(const Algebra& a) {
  std::ostringstream os;
  const Obj& c = a.carrier;
  auto put_mat = [&os](const char* name, const Mat& m) {
    os << name << ' ' << m.rows() << ' ' << m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        os << ' ' << canonical_number(m(i, j).real()) << ' '
           << canonical_number(m(i, j).imag());
    os << '\n';
  };
  if (c.backend() == Backend::GridHilb) {
    os << "grid " << c.category().grid_size() << '\n';
    const Eigen::MatrixXi dims = c.dims_grid();
    os << "cells";
    for (int i = 0; i < dims.rows(); ++i)
      for (int j = 0; j < dims.cols(); ++j) os << ' ' << dims(i, j);
    os << '\n';
  } else {
    const GroupTable& g = c.category().group();
    os << "group " << g.order() << '\n';
    for (const auto& row : g.mult) {
      for (int v : row) os << ' ' << v;
      os << '\n';
    }
    for (int gi = 0; gi < g.order(); ++gi) put_mat("rep", c.rep_matrix(gi));
  }
  put_mat("mult", a.mult.mat());
  put_mat("unit", a.unit.mat());
  return sha256_hex(os.str());
}

UnitarizationCertificate unitarize(const Algebra& a, uint64_t seed,
                                   int max_iterations, int restarts) {
  Report alg = verify_algebra(a);
  if (!alg.pass)
    throw Error(Error::Kind::Domain,
                "unitarize: input fails the algebra laws (worst residual " +
                    fmt(alg.max_residual()) + ")");
  try {
    separability_witness(a);
  } catch (const Error& e) {
    if (e.kind == Error::Kind::NoSolution)
      throw Error(Error::Kind::NoSolution,
                  "unitarize: the multiplication has no bimodule splitting, "
                  "so no coisometric form exists");
    throw;
  }

  UnitarizationCertificate cert;
  cert.input_hash = algebra_fingerprint(a);
  cert.stats.seed = seed;

  const double quick_eps = Tolerance{}.verify_eps;
  Report sp = is_special(a, quick_eps);
  Report cf = verify_cstar_frobenius(a, quick_eps);
  if (sp.pass && cf.pass) {
    cert.output = a;
    cert.iso = Mor::identity(a.carrier);
    cert.method = "exact-wedderburn";
    cert.residuals.special = sp.max_residual();
    cert.residuals.frobenius = cf.max_residual();
    cert.residuals.iso = 0.0;
    cert.stats.residual = std::max(sp.max_residual(), cf.max_residual());
    for (const AlgebraSummand& s : decompose_algebra(a, seed)) {
      SummandTrace tr;
      tr.dim = s.algebra.carrier.dim();
      tr.connected = is_connected(s.algebra).connected;
      tr.method = "exact";
      tr.residual = cert.stats.residual;
      tr.stats.seed = seed;
      cert.summands.push_back(std::move(tr));
    }
    return cert;
  }

  const auto parts = decompose_algebra(a, seed);
  std::vector<SpecialUnitarization> done;
  done.reserve(parts.size());
  for (size_t k = 0; k < parts.size(); ++k) {
    const Algebra& bk = parts[k].algebra;
    SummandTrace tr;
    tr.dim = bk.carrier.dim();
    tr.connected = is_connected(bk).connected;
    // a connected summand must also carry a Frobenius structure; build
    // and verify it before searching for the coisometric form
    if (tr.connected) frobenius_promotion(bk);
    SpecialUnitarization su =
        solver_unitarize(bk, mix_seed(seed, k), max_iterations, restarts);
    tr.method = su.stats.iterations > 0 ? "solver" : "exact";
    tr.residual = su.stats.residual;
    tr.stats = su.stats;
    cert.stats.restarts += su.stats.restarts;
    cert.stats.iterations += su.stats.iterations;
    cert.summands.push_back(std::move(tr));
    done.push_back(std::move(su));
  }

  Mor iso;
  Algebra q;
  if (parts.size() == 1) {
    q = done[0].algebra;
    iso = done[0].iso * parts[0].v;
  } else {
    std::vector<Obj> carriers;
    for (const auto& su : done) carriers.push_back(su.algebra.carrier);
    DirectSum ds = direct_sum(carriers);
    Mor mult = Mor::zero(ds.total.tensor(ds.total), ds.total);
    Mor unit = Mor::zero(a.unit.dom(), ds.total);
    iso = Mor::zero(a.carrier, ds.total);
    for (size_t k = 0; k < done.size(); ++k) {
      const Mor& j = ds.injections[k];
      const Mor pj = j.adjoint();
      mult = mult + j * done[k].algebra.mult * pj.tensor(pj);
      unit = unit + j * done[k].algebra.unit;
      iso = iso + j * done[k].iso * parts[k].v;
    }
    q = Algebra{ds.total, mult, unit};
  }

  Report osp = is_special(q, Tolerance{}.solver_eps);
  Report ocf = verify_cstar_frobenius(q, Tolerance{}.solver_eps);
  const double iso_res = std::max(
      dev(iso * a.mult, q.mult * iso.tensor(iso)), dev(iso * a.unit, q.unit));
  cert.output = std::move(q);
  cert.iso = iso;
  cert.method = cert.stats.iterations > 0 ? "solver" : "exact-wedderburn";
  cert.residuals.special = osp.max_residual();
  cert.residuals.frobenius = ocf.max_residual();
  cert.residuals.iso = iso_res;
  cert.stats.residual = std::max({osp.max_residual(), ocf.max_residual(),
                                  iso_res});
  if (cert.stats.residual > Tolerance{}.solver_eps)
    throw Error(Error::Kind::Solver,
                "unitarize: assembled certificate misses the tolerance "
                "(worst residual " +
                    fmt(cert.stats.residual) + ")");
  return cert;
}

Report verify_certificate(const UnitarizationCertificate& cert,
                          const Algebra& a, double tol) {
  std::vector<CheckItem> checks;
  const bool shapes_ok =
      cert.iso.valid() && cert.output.carrier.valid() &&
      cert.iso.dom() == a.carrier &&
      cert.iso.cod() == cert.output.carrier &&
      cert.output.mult.dom() ==
          cert.output.carrier.tensor(cert.output.carrier) &&
      cert.output.mult.cod() == cert.output.carrier &&
      cert.output.unit.cod() == cert.output.carrier;
  checks.push_back({"shape_consistent", shapes_ok ? 0.0 : 1.0});
  if (!shapes_ok) return finish(std::move(checks), tol);

  checks.push_back(
      {"input_hash", algebra_fingerprint(a) == cert.input_hash ? 0.0 : 1.0});
  checks.push_back({"input_algebra", verify_algebra(a).max_residual()});
  checks.push_back({"output_special", is_special(cert.output).max_residual()});
  checks.push_back({"output_cstar_frobenius",
                    verify_cstar_frobenius(cert.output).max_residual()});

  Eigen::JacobiSVD<Mat> svd(cert.iso.mat());
  const auto& sv = svd.singularValues();
  const bool invertible =
      sv.size() > 0 && sv(0) > 0.0 && sv(sv.size() - 1) > 1e-10 * sv(0);
  checks.push_back({"iso_invertible", invertible ? 0.0 : 1.0});
  checks.push_back(
      {"iso_multiplicative",
       dev(cert.iso * a.mult, cert.output.mult * cert.iso.tensor(cert.iso))});
  checks.push_back({"iso_unit", dev(cert.iso * a.unit, cert.output.unit)});
  return finish(std::move(checks), tol);
}

namespace {

// Structure constants of the algebra in its carrier basis, with the
// left regular matrices L[a] = (x -> e_a x).
struct AbstractAlgebra {
  std::vector<Mat> left;
  Vec unit;
  int dim = 0;
};

AbstractAlgebra abstract_of(const Algebra& a) {
  const Obj& c = a.carrier;
  const int d = c.dim();
  const Eigen::MatrixXi tab = tensor_pair_table(c, c);
  AbstractAlgebra out;
  out.dim = d;
  out.left.assign(d, Mat::Zero(d, d));
  for (int x = 0; x < d; ++x)
    for (int y = 0; y < d; ++y) {
      const int col = tab(x, y);
      if (col >= 0) out.left[x].col(y) = a.mult.mat().col(col);
    }
  out.unit = Vec::Zero(d);
  const Mat& um = a.unit.mat();
  for (Eigen::Index j = 0; j < um.cols(); ++j) out.unit += um.col(j);
  return out;
}

}  // namespace

int radical_dimension(const Algebra& a, double rank_eps) {
  AbstractAlgebra alg = abstract_of(a);
  const int d = alg.dim;
  // the trace form of the left regular representation degenerates
  // exactly on the nilradical
  Mat k(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      k(i, j) = (alg.left[i] * alg.left[j]).trace();
  Eigen::JacobiSVD<Mat> svd(k);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return d;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_eps * sv(0)) ++rank;
  return d - rank;
}

namespace {

// Orthonormal basis of the elements commuting with the whole algebra.
std::vector<Vec> abstract_center(const AbstractAlgebra& alg) {
  const int d = alg.dim;
  Mat sys((long)d * d, d);
  for (int b = 0; b < d; ++b) {
    // right multiplication by e_b, column by column
    Mat rb(d, d);
    for (int c = 0; c < d; ++c) rb.col(c) = alg.left[c].col(b);
    sys.block((long)b * d, 0, d, d) = alg.left[b] - rb;
  }
  std::vector<Vec> out;
  const double scale = sys.size() ? sys.cwiseAbs().maxCoeff() : 0.0;
  if (scale <= 1e-11 * d) {
    for (int j = 0; j < d; ++j) out.push_back(Vec::Unit(d, j));
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(sys, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > Tolerance{}.cluster_eps * sv(0)) ++rank;
  for (Eigen::Index j = rank; j < svd.matrixV().cols(); ++j)
    out.push_back(svd.matrixV().col(j));
  return out;
}

struct MatrixUnits {
  std::vector<Vec> units;  // coords of E_{jk}, row-major in (j, k)
  int n = 0;
};

// Matrix units of a simple block, built from the spectral idempotents
// of a generic element and two generic corner transporters.
MatrixUnits block_matrix_units(const std::vector<Mat>& left, const Vec& unit,
                               std::mt19937_64& rng) {
  const int m = (int)unit.size();
  const int n = (int)std::lround(std::sqrt(double(m)));
  if (n * n != m)
    throw Error(Error::Kind::Internal,
                "wedderburn: simple block dimension is not a square");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rand_vec = [&]() {
    Vec v(m);
    for (int i = 0; i < m; ++i) v(i) = cplx(u(rng), u(rng));
    return v;
  };
  auto mul = [&](const Vec& x, const Vec& y) {
    Vec out = Vec::Zero(m);
    for (int i = 0; i < m; ++i)
      if (x(i) != 0.0) out += x(i) * (left[i] * y);
    return out;
  };
  auto lmat = [&](const Vec& x) {
    Mat out = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i)
      if (x(i) != 0.0) out += x(i) * left[i];
    return out;
  };

  MatrixUnits mu;
  mu.n = n;
  if (n == 1) {
    mu.units = {unit};
    return mu;
  }

  for (int attempt = 0; attempt < 8; ++attempt) {
    std::vector<Vec> diag;
    SpectralSplit ss;
    try {
      ss = spectral_idempotents(lmat(rand_vec()));
    } catch (const Error& e) {
      if (e.kind == Error::Kind::Defective) continue;
      throw;
    }
    if ((int)ss.idempotents.size() != n) continue;
    for (const Mat& p : ss.idempotents) diag.push_back(p * unit);

    std::vector<Vec> row0(n), col0(n);
    row0[0] = diag[0];
    col0[0] = diag[0];
    const Vec r = rand_vec(), s = rand_vec();
    bool ok = true;
    for (int j = 1; j < n && ok; ++j) {
      Vec uj = mul(mul(diag[0], r), diag[j]);
      Vec vj = mul(mul(diag[j], s), diag[0]);
      const cplx cj = diag[0].dot(mul(uj, vj)) / diag[0].squaredNorm();
      if (std::abs(cj) < 1e-9 * (1.0 + uj.norm() * vj.norm())) {
        ok = false;
        break;
      }
      row0[j] = uj;
      col0[j] = vj / cj;
    }
    if (!ok) continue;

    mu.units.assign((size_t)n * n, Vec());
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (j == 0)
          mu.units[k] = row0[k];
        else if (k == 0)
          mu.units[(size_t)j * n] = col0[j];
        else
          mu.units[(size_t)j * n + k] = mul(col0[j], row0[k]);
      }
    mu.units[0] = diag[0];

    // validate the multiplication table before accepting
    double scale = 0.0;
    for (const Vec& e : mu.units) scale = std::max(scale, e.norm());
    double worst = 0.0;
    for (int j = 0; j < n && worst < 1e-8 * (1.0 + scale * scale); ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          for (int p = 0; p < n; ++p) {
            Vec prod = mul(mu.units[(size_t)j * n + k],
                           mu.units[(size_t)l * n + p]);
            if (k == l) prod -= mu.units[(size_t)j * n + p];
            worst = std::max(worst, prod.norm());
          }
    if (worst >= 1e-8 * (1.0 + scale * scale)) continue;
    return mu;
  }
  throw Error(Error::Kind::Internal,
              "wedderburn: matrix-unit construction did not stabilize");
}

}  // namespace

WedderburnDecomposition wedderburn_exact(const Algebra& a, uint64_t seed) {
  const Obj& c = a.carrier;
  int cell = 0;
  if (c.backend() == Backend::RepG) {
    if (c.category().group().order() != 1)
      throw Error(Error::Kind::Domain,
                  "wedderburn: only plain Hilbert backends (trivial group "
                  "or one diagonal grid cell)");
  } else {
    const Eigen::MatrixXi dims = c.dims_grid();
    cell = -1;
    for (int i = 0; i < dims.rows(); ++i)
      for (int j = 0; j < dims.cols(); ++j) {
        if (dims(i, j) == 0) continue;
        if (i != j || (cell >= 0 && cell != i))
          throw Error(Error::Kind::Domain,
                      "wedderburn: carrier must occupy one diagonal cell");
        cell = i;
      }
    if (cell < 0)
      throw Error(Error::Kind::Domain, "wedderburn: carrier is zero");
  }
  Report alg = verify_algebra(a);
  if (!alg.pass)
    throw Error(Error::Kind::Domain,
                "wedderburn: input fails the algebra laws");

  const int rad = radical_dimension(a);
  if (rad != 0)
    throw Error(Error::Kind::NoSolution,
                "wedderburn: nilradical has dimension " + std::to_string(rad));

  AbstractAlgebra abs = abstract_of(a);
  const int d = abs.dim;
  std::vector<Vec> z = abstract_center(abs);
  std::mt19937_64 rng(mix_seed(seed, 0xa11de5));
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // central idempotents from the spectral split of a generic central
  // element acting on the left
  std::vector<Mat> projections;
  for (int attempt = 0; attempt < 8 && projections.empty(); ++attempt) {
    Vec zc = Vec::Zero(d);
    for (size_t j = 0; j < z.size(); ++j)
      zc += cplx(double(j + 1) + 0.25 * u(rng), 0.0) * z[j];
    Mat lz = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
      if (zc(i) != 0.0) lz += zc(i) * abs.left[i];
    try {
      SpectralSplit ss = spectral_idempotents(lz);
      if (ss.idempotents.size() == z.size())
        projections = std::move(ss.idempotents);
    } catch (const Error& e) {
      if (e.kind != Error::Kind::Defective) throw;
    }
  }
  if (projections.empty())
    throw Error(Error::Kind::Internal,
                "wedderburn: center split did not separate the blocks");

  WedderburnDecomposition out;
  std::vector<Mat> iso_rows;
  std::vector<int> offsets;
  int total = 0;
  for (const Mat& p : projections) {
    IdempotentSplit sp = split_idempotent(p);
    const int bd = (int)sp.v.rows();
    std::vector<Mat> bleft(bd);
    for (int j = 0; j < bd; ++j) {
      Mat lw = Mat::Zero(d, d);
      const Vec wj = sp.w.col(j);
      for (int i = 0; i < d; ++i)
        if (wj(i) != 0.0) lw += wj(i) * abs.left[i];
      bleft[j] = sp.v * lw * sp.w;
    }
    const Vec bunit = sp.v * (p * abs.unit);
    MatrixUnits mu = block_matrix_units(bleft, bunit, rng);

    Mat b(bd, bd);
    for (int j = 0; j < bd; ++j) b.col(j) = mu.units[(size_t)j];
    Eigen::FullPivLU<Mat> lu(b);
    if (!lu.isInvertible())
      throw Error(Error::Kind::Internal,
                  "wedderburn: matrix units do not span their block");
    // block coordinates -> scaled matrix-unit coefficients
    iso_rows.push_back(std::sqrt(double(mu.n)) *
                       Mat(lu.inverse() * sp.v));
    offsets.push_back(total);
    out.blocks.push_back(mu.n);
    total += bd;
  }

  Obj target;
  if (c.backend() == Backend::RepG) {
    target = c.category().rep_object({Mat::Identity(total, total)});
  } else {
    Eigen::MatrixXi dims =
        Eigen::MatrixXi::Zero(c.grade_count(), c.grade_count());
    dims(cell, cell) = total;
    target = c.category().grid_object(dims);
  }

  std::vector<Mat> lm(total, Mat::Zero(total, total));
  Vec unit_coords = Vec::Zero(total);
  for (size_t blk = 0; blk < out.blocks.size(); ++blk) {
    const int n = out.blocks[blk];
    const int o = offsets[blk];
    const double scale = 1.0 / std::sqrt(double(n));
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k)
        for (int p = 0; p < n; ++p)
          lm[o + j * n + k](o + j * n + p, o + k * n + p) = scale;
      unit_coords(o + j * n + j) = std::sqrt(double(n));
    }
  }
  out.algebra = algebra_from_left_mult(target, lm, unit_coords);

  Mat t(total, d);
  for (size_t blk = 0; blk < out.blocks.size(); ++blk)
    t.middleRows(offsets[blk], iso_rows[blk].rows()) = iso_rows[blk];
  out.iso = Mor::checked(c, target, t, 1e-8);

  const double ires =
      std::max(dev(out.iso * a.mult, out.algebra.mult *
                                         out.iso.tensor(out.iso)),
               dev(out.iso * a.unit, out.algebra.unit));
  if (ires > 1e-8 * (1.0 + out.iso.mat().cwiseAbs().maxCoeff()))
    throw Error(Error::Kind::Internal,
                "wedderburn: assembled isomorphism fails the algebra map "
                "law (residual " +
                    fmt(ires) + ")");
  return out;
}

}  // namespace qsf
