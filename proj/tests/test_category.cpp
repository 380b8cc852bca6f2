#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qsf/category.hpp"

#include <random>

using namespace qsf;

namespace {

double dev(const Mat& a, const Mat& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

Mat random_complex(int rows, int cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

// random element of Hom(x,y) as a seeded combination of the hom basis
Mor random_hom(const Obj& x, const Obj& y, uint64_t seed) {
  auto basis = hom_basis(x, y);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mor out = Mor::zero(x, y);
  for (const Mor& b : basis) out = out + cplx(g(rng), g(rng)) * b;
  return out;
}

// unitary endomorphism inside End(x): polar factor of a random hom
Mor random_unitary_endo(const Obj& x, uint64_t seed) {
  for (int tries = 0; tries < 16; ++tries) {
    Mor c = random_hom(x, x, seed + 1000 * tries);
    c = c + 0.3 * Mor::identity(x);  // nudge away from singular combos
    Eigen::JacobiSVD<Mat> svd(c.mat());
    if (svd.singularValues().minCoeff() < 0.1) continue;
    auto pr = polar_decompose(c.mat());
    return Mor(x, x, pr.unitary);
  }
  throw std::runtime_error("random_unitary_endo: could not find one");
}

// --- S3 representation data, built from scratch as an oracle ---

std::vector<std::vector<int>> perms3() {
  return {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
}

std::vector<Mat> s3_perm_rep() {
  auto ps = perms3();
  std::vector<Mat> rep;
  for (const auto& p : ps) {
    Mat m = Mat::Zero(3, 3);
    for (int x = 0; x < 3; ++x) m(p[x], x) = 1.0;
    rep.push_back(m);
  }
  return rep;
}

std::vector<Mat> s3_trivial_rep() { return std::vector<Mat>(6, Mat::Ones(1, 1)); }

std::vector<Mat> s3_sign_rep() {
  auto ps = perms3();
  std::vector<Mat> rep;
  for (const auto& p : ps) {
    int inv = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if (p[i] > p[j]) ++inv;
    rep.push_back(Mat::Constant(1, 1, inv % 2 ? -1.0 : 1.0));
  }
  return rep;
}

std::vector<Mat> s3_standard_rep() {
  Mat w(3, 2);
  w << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0),
      -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0),
      0.0, -2.0 / std::sqrt(6.0);
  std::vector<Mat> rep;
  for (const Mat& p : s3_perm_rep()) rep.push_back(w.adjoint() * p * w);
  return rep;
}

std::vector<Mat> regular_rep(const GroupTable& g) {
  std::vector<Mat> rep;
  for (int a = 0; a < g.order(); ++a) {
    Mat m = Mat::Zero(g.order(), g.order());
    for (int h = 0; h < g.order(); ++h) m(g.mult[a][h], h) = 1.0;
    rep.push_back(m);
  }
  return rep;
}

// multiplicity of the irrep with character chi inside the rep of x,
// computed from traces alone (Schur orthogonality oracle)
double char_mult(const Obj& x, const std::vector<cplx>& chi) {
  const GroupTable& g = x.category().group();
  cplx acc = 0;
  for (int a = 0; a < g.order(); ++a)
    acc += x.rep_matrix(a).trace() * std::conj(chi[a]);
  return std::real(acc) / g.order();
}

std::vector<cplx> character(const std::vector<Mat>& rep) {
  std::vector<cplx> chi;
  for (const Mat& m : rep) chi.push_back(m.trace());
  return chi;
}

}  // namespace

TEST_CASE("group tables: cyclic and symmetric") {
  auto z4 = GroupTable::cyclic(4);
  CHECK(z4.order() == 4);
  CHECK(z4.identity == 0);
  CHECK(z4.mult[3][2] == 1);
  CHECK(z4.inverse[1] == 3);

  auto s3 = GroupTable::symmetric(3);
  CHECK(s3.order() == 6);
  CHECK(s3.identity == 0);
  // (021)(021) = e; (120)(120) = (201); (120)(201) = e
  CHECK(s3.mult[1][1] == 0);
  CHECK(s3.mult[3][3] == 4);
  CHECK(s3.mult[3][4] == 0);
  CHECK(s3.inverse[3] == 4);

  // broken table: constant rows have no identity
  std::vector<std::vector<int>> bad(2, std::vector<int>(2, 0));
  CHECK_THROWS_AS((void)GroupTable::from_table(bad), Error);
}

TEST_CASE("strictness: tensor of objects is associative and unital on the nose") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2), dy(2, 2), dz(2, 2);
  dx << 1, 1, 0, 1;
  dy << 1, 0, 1, 1;
  dz << 0, 1, 2, 0;
  Obj x = c.grid_object(dx), y = c.grid_object(dy), z = c.grid_object(dz);
  CHECK((x.tensor(y)).tensor(z) == x.tensor(y.tensor(z)));
  CHECK(x.tensor(c.unit()) == x);
  CHECK(c.unit().tensor(x) == x);
  CHECK(x.tensor(y) != y.tensor(x));

  auto r = Category::rep_group(GroupTable::symmetric(3));
  Obj sx = r.rep_object(s3_standard_rep());
  Obj sr = r.rep_object(regular_rep(GroupTable::symmetric(3)));
  CHECK((sx.tensor(sr)).tensor(sx) == sx.tensor(sr.tensor(sx)));
  CHECK(sx.tensor(r.unit()) == sx);
  CHECK(r.unit().tensor(sx) == sx);
}

TEST_CASE("strict unit law on morphisms: f tensor id_unit is f verbatim") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2);
  dx << 2, 1, 0, 1;
  Obj x = c.grid_object(dx);
  Mor f = random_hom(x, x, 17);
  Mor fu = f.tensor(Mor::identity(c.unit()));
  Mor uf = Mor::identity(c.unit()).tensor(f);
  CHECK(fu.dom() == x);
  CHECK(uf.dom() == x);
  CHECK(dev(fu.mat(), f.mat()) == 0.0);
  CHECK(dev(uf.mat(), f.mat()) == 0.0);
}

TEST_CASE("grid tensor layout: j-ascending blocks, frozen diagonal") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2), dy(2, 2);
  dx << 1, 1, 0, 1;
  dy << 1, 0, 1, 1;
  Obj x = c.grid_object(dx), y = c.grid_object(dy);
  Obj xy = x.tensor(y);
  Eigen::MatrixXi expect(2, 2);
  expect << 2, 1, 1, 1;  // matrix product of the dim grids
  CHECK(xy.dims_grid() == expect);

  // diagonal morphisms tensored: the product diagonal pins the canonical
  // basis order (middle index ascending inside each (i,k) block)
  Mat um = Mat::Zero(3, 3), vm = Mat::Zero(3, 3);
  um.diagonal() << 2, 3, 5;   // X cells in order (0,0), (0,1), (1,1)
  vm.diagonal() << 7, 11, 13; // Y cells in order (0,0), (1,0), (1,1)
  Mor u(x, x, um), v(y, y, vm);
  Mor uv = u.tensor(v);
  Vec d = uv.mat().diagonal();
  REQUIRE(d.size() == 5);
  CHECK(d(0) == cplx(14));  // (0,0) via middle 0
  CHECK(d(1) == cplx(33));  // (0,0) via middle 1
  CHECK(d(2) == cplx(39));  // (0,1)
  CHECK(d(3) == cplx(55));  // (1,0)
  CHECK(d(4) == cplx(65));  // (1,1)
}

TEST_CASE("grid simples multiply like matrix units") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi e01 = Eigen::MatrixXi::Zero(2, 2);
  e01(0, 1) = 1;
  Eigen::MatrixXi e10 = Eigen::MatrixXi::Zero(2, 2);
  e10(1, 0) = 1;
  Obj a = c.grid_object(e01), b = c.grid_object(e10);
  Obj ab = a.tensor(b);
  CHECK(ab.dim() == 1);
  Eigen::MatrixXi expect = Eigen::MatrixXi::Zero(2, 2);
  expect(0, 0) = 1;
  CHECK(ab.dims_grid() == expect);
}

TEST_CASE("dagger: involution and scalar conjugation are bitwise") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2), dy(2, 2);
  dx << 2, 1, 1, 1;
  dy << 1, 2, 0, 2;
  Obj x = c.grid_object(dx), y = c.grid_object(dy);
  Mor f = random_hom(x, y, 3);
  CHECK(dev(f.adjoint().adjoint().mat(), f.mat()) == 0.0);

  Obj unit1 = Category::grid_hilb(1).unit();
  Mor i_scalar(unit1, unit1, Mat::Constant(1, 1, cplx(0, 1)));
  CHECK(i_scalar.adjoint().mat()(0, 0) == cplx(0, -1));

  Mor id = Mor::identity(x);
  CHECK(dev(id.adjoint().mat(), id.mat()) == 0.0);
}

TEST_CASE("dagger distributes over tensor bitwise") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2), dy(2, 2);
  dx << 1, 1, 1, 1;
  dy << 2, 0, 1, 1;
  Obj x = c.grid_object(dx), y = c.grid_object(dy);
  Mor f = random_hom(x, x, 5), g = random_hom(y, y, 6);
  CHECK(dev(f.tensor(g).adjoint().mat(), f.adjoint().tensor(g.adjoint()).mat()) ==
        0.0);

  auto r = Category::rep_group(GroupTable::symmetric(3));
  Obj sx = r.rep_object(s3_standard_rep());
  Mor h = random_hom(sx.tensor(sx), sx.tensor(sx), 7);
  Mor k = random_hom(sx, sx, 8);
  CHECK(dev(h.tensor(k).adjoint().mat(), h.adjoint().tensor(k.adjoint()).mat()) ==
        0.0);
}

TEST_CASE("dagger is anti-multiplicative, exactly on sparse unit data") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2);
  dx << 2, 1, 1, 2;
  Obj x = c.grid_object(dx);

  // generalized permutation morphisms: one power-of-two entry per column
  auto gen_perm = [&](uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mat m = Mat::Zero(x.dim(), x.dim());
    for (int col = 0; col < x.dim(); ++col) {
      // pick a row in the same grade block
      std::vector<int> rows;
      for (int rrow = 0; rrow < x.dim(); ++rrow)
        if (x.grade_start(rrow) == x.grade_start(col) &&
            x.grade_end(rrow) == x.grade_end(col))
          rows.push_back(rrow);
      int row = rows[rng() % rows.size()];
      static const cplx phases[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      double mag = std::ldexp(1.0, int(rng() % 5) - 2);  // 2^-2 .. 2^2
      m(row, col) = mag * phases[rng() % 4];
    }
    return Mor(x, x, m);
  };
  for (uint64_t s : {21u, 22u, 23u}) {
    Mor f = gen_perm(s), g = gen_perm(s + 100);
    CHECK(dev((g * f).adjoint().mat(), (f.adjoint() * g.adjoint()).mat()) == 0.0);
  }
  // dense morphisms agree to rounding
  Mor f = random_hom(x, x, 31), g = random_hom(x, x, 32);
  CHECK(dev((g * f).adjoint().mat(), (f.adjoint() * g.adjoint()).mat()) < 1e-13);
}

TEST_CASE("interchange law") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2), dy(2, 2);
  dx << 1, 1, 1, 1;
  dy << 1, 1, 1, 1;
  Obj x = c.grid_object(dx), y = c.grid_object(dy);

  // exact on generalized permutation data (single products, no sums)
  auto gen_perm = [&](const Obj& o, uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mat m = Mat::Zero(o.dim(), o.dim());
    std::vector<int> target(o.dim());
    for (int col = 0; col < o.dim(); ++col) target[col] = col;
    // permute within grade blocks only
    for (int col = 0; col < o.dim(); ++col) {
      int other = int(rng() % o.dim());
      if (o.grade_start(other) == o.grade_start(col) &&
          o.grade_end(other) == o.grade_end(col))
        std::swap(target[col], target[other]);
    }
    static const cplx phases[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (int col = 0; col < o.dim(); ++col)
      m(target[col], col) = std::ldexp(1.0, int(seed + col) % 3) *
                            phases[(seed / 7 + col) % 4];
    return Mor(o, o, m);
  };
  for (uint64_t s : {41u, 42u}) {
    Mor f1 = gen_perm(x, s), f2 = gen_perm(x, s + 1);
    Mor g1 = gen_perm(y, s + 2), g2 = gen_perm(y, s + 3);
    CHECK(dev((f1.tensor(g1) * f2.tensor(g2)).mat(),
              (f1 * f2).tensor(g1 * g2).mat()) == 0.0);
  }
  // dense data to rounding
  for (uint64_t s : {51u, 52u}) {
    Mor f1 = random_hom(x, x, s), f2 = random_hom(x, x, s + 10);
    Mor g1 = random_hom(y, y, s + 20), g2 = random_hom(y, y, s + 30);
    double scale = f1.norm() * f2.norm() * g1.norm() * g2.norm() + 1.0;
    CHECK(dev((f1.tensor(g1) * f2.tensor(g2)).mat(),
              (f1 * f2).tensor(g1 * g2).mat()) < 1e-12 * scale);
  }

  auto r = Category::rep_group(GroupTable::cyclic(3));
  Obj reg = r.rep_object(regular_rep(GroupTable::cyclic(3)));
  Mor f1 = random_hom(reg, reg, 61), f2 = random_hom(reg, reg, 62);
  Mor g1 = random_hom(reg, reg, 63), g2 = random_hom(reg, reg, 64);
  double scale = f1.norm() * f2.norm() * g1.norm() * g2.norm() + 1.0;
  CHECK(dev((f1.tensor(g1) * f2.tensor(g2)).mat(),
            (f1 * f2).tensor(g1 * g2).mat()) < 1e-12 * scale);
}

TEST_CASE("hom_basis: grid unit has n-dimensional endomorphisms") {
  auto c = Category::grid_hilb(2);
  auto basis = hom_basis(c.unit(), c.unit());
  CHECK(basis.size() == 2);
  for (size_t i = 0; i < basis.size(); ++i)
    for (size_t j = 0; j < basis.size(); ++j) {
      cplx ip = frobenius_inner(basis[i], basis[j]);
      CHECK(std::abs(ip - (i == j ? cplx(1) : cplx(0))) < 1e-12);
    }
}

TEST_CASE("hom_basis: S3 representation dimensions match character oracle") {
  auto s3 = GroupTable::symmetric(3);
  auto r = Category::rep_group(s3);
  Obj triv = r.rep_object(s3_trivial_rep());
  Obj sign = r.rep_object(s3_sign_rep());
  Obj stdr = r.rep_object(s3_standard_rep());
  Obj reg = r.rep_object(regular_rep(s3));

  CHECK(hom_basis(triv, stdr).empty());
  CHECK(hom_basis(stdr, stdr).size() == 1);
  CHECK(hom_basis(reg, reg).size() == 6);

  // 2-dim (x) 2-dim = triv + sign + 2-dim, by characters and hom spaces
  Obj ss = stdr.tensor(stdr);
  CHECK(ss.dim() == 4);
  CHECK(char_mult(ss, character(s3_trivial_rep())) == doctest::Approx(1.0));
  CHECK(char_mult(ss, character(s3_sign_rep())) == doctest::Approx(1.0));
  CHECK(char_mult(ss, character(s3_standard_rep())) == doctest::Approx(1.0));
  CHECK(hom_basis(triv, ss).size() == 1);
  CHECK(hom_basis(sign, ss).size() == 1);
  CHECK(hom_basis(stdr, ss).size() == 1);
}

TEST_CASE("hom_basis: orthonormal and spanning") {
  auto s3 = GroupTable::symmetric(3);
  auto r = Category::rep_group(s3);
  Obj stdr = r.rep_object(s3_standard_rep());
  Obj reg = r.rep_object(regular_rep(s3));
  auto basis = hom_basis(reg, stdr.tensor(stdr));
  REQUIRE(!basis.empty());
  for (size_t i = 0; i < basis.size(); ++i)
    for (size_t j = 0; j < basis.size(); ++j)
      CHECK(std::abs(frobenius_inner(basis[i], basis[j]) -
                     (i == j ? cplx(1) : cplx(0))) < 1e-12);

  // independently constructed intertwiner: group-average a random map
  Mat raw = random_complex(4, 6, 77);
  Mat avg = Mat::Zero(4, 6);
  for (int g = 0; g < 6; ++g)
    avg += stdr.tensor(stdr).rep_matrix(g) * raw *
           reg.rep_matrix(g).adjoint();
  avg /= 6.0;
  Mor t(reg, stdr.tensor(stdr), avg);
  Mor proj = Mor::zero(reg, stdr.tensor(stdr));
  for (const Mor& b : basis) proj = proj + frobenius_inner(b, t) * b;
  CHECK(dev(proj.mat(), t.mat()) < 1e-10);
}

TEST_CASE("tau on the unit") {
  auto c3 = Category::grid_hilb(3);
  CHECK(tau(Mor::identity(c3.unit())) == cplx(3));
  CHECK(tau(Mor::zero(c3.unit(), c3.unit())) == cplx(0));

  auto c2 = Category::grid_hilb(2);
  Mat f = Mat::Zero(2, 2);
  f(0, 0) = 2;
  CHECK(tau(Mor(c2.unit(), c2.unit(), f)) == cplx(2));

  Eigen::MatrixXi dx = Eigen::MatrixXi::Ones(2, 2);
  Obj x = c2.grid_object(dx);
  CHECK_THROWS_AS((void)tau(Mor::identity(x)), Error);
}

TEST_CASE("balanced_duality: unit object and trivial-group vector spaces") {
  auto c3 = Category::grid_hilb(3);
  auto sol = balanced_duality(c3.unit());
  CHECK(sol.dual == c3.unit());
  CHECK(dev(sol.gamma.mat(), Mat::Identity(3, 3)) == 0.0);
  CHECK(dev(sol.gamma_bar.mat(), Mat::Identity(3, 3)) == 0.0);
  CHECK(scalar_dimension(c3.unit()).total == doctest::Approx(3.0));

  auto tr = Category::rep_group(GroupTable::trivial());
  std::vector<Mat> c2rep{Mat::Identity(2, 2)};
  Obj v = tr.rep_object(c2rep);
  auto sv = balanced_duality(v);
  CHECK(std::abs(tau(sv.gamma.adjoint() * sv.gamma) - cplx(2)) < 1e-14);
  CHECK(std::abs(tau(sv.gamma_bar.adjoint() * sv.gamma_bar) - cplx(2)) < 1e-14);
}

TEST_CASE("balanced_duality: grid simple off the diagonal") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi e01 = Eigen::MatrixXi::Zero(2, 2);
  e01(0, 1) = 1;
  Obj x = c.grid_object(e01);
  auto sol = balanced_duality(x);
  // gamma lands in the second unit summand, gamma_bar in the first
  REQUIRE(sol.gamma.mat().cols() == 2);
  CHECK(sol.gamma.mat().col(0).norm() == 0.0);
  CHECK(sol.gamma.mat().col(1).norm() == doctest::Approx(1.0));
  CHECK(sol.gamma_bar.mat().col(0).norm() == doctest::Approx(1.0));
  CHECK(sol.gamma_bar.mat().col(1).norm() == 0.0);
}

namespace {

void check_duality_properties(const Obj& x, uint64_t seed) {
  auto sol = balanced_duality(x);
  const Obj xb = sol.dual;
  const Mor ix = Mor::identity(x), ixb = Mor::identity(xb);
  // conjugate equations
  Mor left = (sol.gamma_bar.adjoint().tensor(ix)) * (ix.tensor(sol.gamma));
  Mor right = (sol.gamma.adjoint().tensor(ixb)) * (ixb.tensor(sol.gamma_bar));
  CHECK(dev(left.mat(), ix.mat()) < 1e-10);
  CHECK(dev(right.mat(), ixb.mat()) < 1e-10);
  // balancing against the matrix trace on a random endomorphism
  Mor f = random_hom(x, x, seed);
  cplx lhs = tau(sol.gamma.adjoint() * (ixb.tensor(f)) * sol.gamma);
  cplx rhs = tau(sol.gamma_bar.adjoint() * (f.tensor(ixb)) * sol.gamma_bar);
  CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
  CHECK(std::abs(lhs - f.mat().trace()) < 1e-10 * (1.0 + std::abs(lhs)));
  // dimensions agree with the dual
  CHECK(scalar_dimension(x).total ==
        doctest::Approx(scalar_dimension(xb).total).epsilon(1e-10));
}

}  // namespace

TEST_CASE("balanced_duality: property battery") {
  auto c2 = Category::grid_hilb(2);
  Eigen::MatrixXi d1(2, 2), d2(2, 2);
  d1 << 1, 2, 0, 1;
  d2 << 2, 1, 1, 1;
  check_duality_properties(c2.grid_object(d1), 101);
  check_duality_properties(c2.grid_object(d2), 102);
  check_duality_properties(c2.grid_object(d1).tensor(c2.grid_object(d2)), 103);

  auto c3 = Category::grid_hilb(3);
  Eigen::MatrixXi d3(3, 3);
  d3 << 1, 1, 0, 0, 1, 2, 1, 0, 1;
  check_duality_properties(c3.grid_object(d3), 104);

  auto s3 = GroupTable::symmetric(3);
  auto r = Category::rep_group(s3);
  check_duality_properties(r.rep_object(s3_standard_rep()), 105);
  check_duality_properties(r.rep_object(regular_rep(s3)), 106);
  Obj ss = r.rep_object(s3_standard_rep()).tensor(r.rep_object(s3_sign_rep()));
  check_duality_properties(ss, 107);
}

TEST_CASE("duality: cross-object trace identity") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2), dy(2, 2);
  dx << 1, 1, 1, 0;
  dy << 2, 1, 0, 1;
  Obj x = c.grid_object(dx), y = c.grid_object(dy);
  Mor g = random_hom(x, y, 201), h = random_hom(y, x, 202);
  auto sx = balanced_duality(x);
  auto sy = balanced_duality(y);
  cplx a = tau(sx.gamma.adjoint() *
               (Mor::identity(sx.dual).tensor(h * g)) * sx.gamma);
  cplx b = tau(sx.gamma_bar.adjoint() *
               ((h * g).tensor(Mor::identity(sx.dual))) * sx.gamma_bar);
  cplx d = tau(sy.gamma.adjoint() *
               (Mor::identity(sy.dual).tensor(g * h)) * sy.gamma);
  CHECK(std::abs(a - b) < 1e-10 * (1.0 + std::abs(a)));
  CHECK(std::abs(a - d) < 1e-10 * (1.0 + std::abs(a)));
}

TEST_CASE("scalar_dimension: per-cell values and examples") {
  auto c3 = Category::grid_hilb(3);
  auto sd = scalar_dimension(c3.unit());
  CHECK(sd.total == doctest::Approx(3.0));
  CHECK(sd.per_cell(0, 0) == doctest::Approx(1.0));
  CHECK(sd.per_cell(0, 1) == doctest::Approx(0.0));

  auto s3 = GroupTable::symmetric(3);
  auto r = Category::rep_group(s3);
  CHECK(scalar_dimension(r.rep_object(regular_rep(s3))).total ==
        doctest::Approx(6.0));

  auto tr = Category::rep_group(GroupTable::trivial());
  std::vector<Mat> c5{Mat::Identity(5, 5)};
  CHECK(scalar_dimension(tr.rep_object(c5)).total == doctest::Approx(5.0));
}

TEST_CASE("compare_duality: identity, twisted, and non-unitary cases") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2);
  dx << 1, 2, 1, 1;
  Obj x = c.grid_object(dx);
  auto sol = balanced_duality(x);

  auto self = compare_duality(sol, sol);
  CHECK(self.equivalent);
  CHECK(!self.mirrored);
  CHECK(dev(self.u.mat(), Mat::Identity(x.dim(), x.dim())) < 1e-12);

  // twist by a random unitary on the primal leg
  Mor u0 = random_unitary_endo(x, 301);
  DualitySolution tw;
  tw.obj = x;
  tw.dual = sol.dual;
  tw.gamma = Mor::identity(sol.dual).tensor(u0) * sol.gamma;
  tw.gamma_bar = u0.tensor(Mor::identity(sol.dual)) * sol.gamma_bar;
  auto cmp = compare_duality(sol, tw);
  CHECK(cmp.equivalent);
  CHECK(!cmp.mirrored);
  CHECK(dev(cmp.u.mat(), u0.mat()) < 1e-10);
  CHECK(cmp.residual <= 1e-10 * 2.0);

  // positive non-unitary twist must be rejected
  Mor h = Mor::identity(x) + 0.3 * (random_hom(x, x, 303) +
                                    random_hom(x, x, 303).adjoint());
  DualitySolution bad;
  bad.obj = x;
  bad.dual = sol.dual;
  bad.gamma = Mor::identity(sol.dual).tensor(h) * sol.gamma;
  bad.gamma_bar = h.tensor(Mor::identity(sol.dual)) * sol.gamma_bar;
  auto cb = compare_duality(sol, bad);
  CHECK(!cb.equivalent);

  // RepG: twist the regular representation
  auto s3 = GroupTable::symmetric(3);
  auto r = Category::rep_group(s3);
  Obj reg = r.rep_object(regular_rep(s3));
  auto rsol = balanced_duality(reg);
  Mor ru = random_unitary_endo(reg, 305);
  DualitySolution rtw;
  rtw.obj = reg;
  rtw.dual = rsol.dual;
  rtw.gamma = Mor::identity(rsol.dual).tensor(ru) * rsol.gamma;
  rtw.gamma_bar = ru.tensor(Mor::identity(rsol.dual)) * rsol.gamma_bar;
  auto rc = compare_duality(rsol, rtw);
  CHECK(rc.equivalent);
  CHECK(dev(rc.u.mat(), ru.mat()) < 1e-10);
}

TEST_CASE("compare_duality: mirrored twist on the dual leg") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2);
  dx << 1, 1, 1, 1;
  Obj x = c.grid_object(dx);
  auto sol = balanced_duality(x);
  Mor ub = random_unitary_endo(sol.dual, 307);
  DualitySolution tw;
  tw.obj = x;
  tw.dual = sol.dual;
  tw.gamma = ub.tensor(Mor::identity(x)) * sol.gamma;
  tw.gamma_bar = Mor::identity(x).tensor(ub) * sol.gamma_bar;
  auto cmp = compare_duality(sol, tw);
  CHECK(cmp.equivalent);
  // either form may match (they are related through transposition),
  // but the recovered unitary must reproduce the twisted solution
  if (cmp.mirrored) {
    CHECK(dev(cmp.u.mat(), ub.mat()) < 1e-10);
  }
}

TEST_CASE("split_idempotent on morphisms: grid backend") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2);
  dx << 3, 2, 0, 2;
  Obj x = c.grid_object(dx);
  // build a graded idempotent blockwise: S diag(1,..,0) S^-1 per cell
  std::mt19937_64 rng(401);
  Mat p = Mat::Zero(x.dim(), x.dim());
  Eigen::MatrixXi expected_rank(2, 2);
  expected_rank << 2, 1, 0, 1;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      auto [off, cnt] = x.grade_range(i, j);
      if (cnt == 0) continue;
      Mat s = random_complex(cnt, cnt, rng());
      Mat d = Mat::Zero(cnt, cnt);
      for (int k = 0; k < expected_rank(i, j); ++k) d(k, k) = 1;
      p.block(off, off, cnt, cnt) = s * d * s.inverse();
    }
  auto sp = split_idempotent(Mor(x, x, p));
  CHECK(sp.image.dims_grid() == expected_rank);
  CHECK(dev((sp.v * sp.w).mat(), Mat::Identity(sp.image.dim(), sp.image.dim())) <
        1e-10);
  CHECK(dev((sp.w * sp.v).mat(), p) < 1e-9);
}

TEST_CASE("split_idempotent on morphisms: representation backend") {
  auto z2 = GroupTable::cyclic(2);
  auto r = Category::rep_group(z2);
  // triv + sign + triv
  std::vector<Mat> rep(2);
  rep[0] = Mat::Identity(3, 3);
  rep[1] = Mat::Identity(3, 3);
  rep[1](1, 1) = -1;
  Obj x = r.rep_object(rep);
  Mat pm = Mat::Zero(3, 3);
  pm(0, 0) = 1;
  pm(2, 2) = 1;  // projection onto the trivial isotype
  auto sp = split_idempotent(Mor(x, x, pm));
  CHECK(sp.image.dim() == 2);
  CHECK(dev(sp.image.rep_matrix(1), Mat::Identity(2, 2)) < 1e-12);
  CHECK(dev((sp.v * sp.w).mat(), Mat::Identity(2, 2)) < 1e-12);
  CHECK(dev((sp.w * sp.v).mat(), pm) < 1e-12);
}

TEST_CASE("direct_sum: grid and representation backends") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi da(2, 2), db(2, 2);
  da << 1, 1, 0, 1;
  db << 2, 0, 1, 1;
  Obj a = c.grid_object(da), b = c.grid_object(db);
  auto ds = direct_sum({a, b});
  CHECK(ds.total.dims_grid() == (da + db).eval());
  REQUIRE(ds.injections.size() == 2);
  Mat sum = Mat::Zero(ds.total.dim(), ds.total.dim());
  for (int k = 0; k < 2; ++k) {
    const Mat& m = ds.injections[k].mat();
    CHECK(dev(m.adjoint() * m,
              Mat::Identity(ds.injections[k].dom().dim(),
                            ds.injections[k].dom().dim())) == 0.0);
    sum += m * m.adjoint();
  }
  CHECK(dev(sum, Mat::Identity(ds.total.dim(), ds.total.dim())) == 0.0);
  CHECK(dev((ds.injections[0].adjoint() * ds.injections[1]).mat(),
            Mat::Zero(a.dim(), b.dim())) == 0.0);

  auto s3 = GroupTable::symmetric(3);
  auto r = Category::rep_group(s3);
  Obj t1 = r.rep_object(s3_trivial_rep());
  Obj t2 = r.rep_object(s3_standard_rep());
  auto rs = direct_sum({t1, t2});
  CHECK(rs.total.dim() == 3);
  CHECK(dev((rs.injections[0].adjoint() * rs.injections[0]).mat(),
            Mat::Identity(1, 1)) == 0.0);
  // injections intertwine by construction; validate one explicitly
  CHECK_NOTHROW((void)Mor::checked(t2, rs.total, rs.injections[1].mat()));
}

TEST_CASE("Mor::checked enforces the backend morphism laws") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2);
  dx << 1, 1, 0, 1;
  Obj x = c.grid_object(dx);
  Mat bad = Mat::Zero(3, 3);
  bad(0, 1) = 1.0;  // connects cells (0,0) and (0,1)
  CHECK_THROWS_AS((void)Mor::checked(x, x, bad), Error);
  Mat good = Mat::Zero(3, 3);
  good(1, 1) = 2.0;
  good(0, 0) = 1e-14;  // grading dust is snapped, not rejected
  Mor m = Mor::checked(x, x, good);
  CHECK(m.mat()(1, 1) == cplx(2.0));

  auto s3 = GroupTable::symmetric(3);
  auto r = Category::rep_group(s3);
  Obj triv = r.rep_object(s3_trivial_rep());
  Obj sign = r.rep_object(s3_sign_rep());
  CHECK_THROWS_AS((void)Mor::checked(triv, sign, Mat::Ones(1, 1)), Error);
  CHECK_NOTHROW((void)Mor::checked(triv, triv, Mat::Ones(1, 1)));
}

TEST_CASE("object equality is value based") {
  auto c = Category::grid_hilb(2);
  Eigen::MatrixXi dx(2, 2);
  dx << 1, 2, 3, 4;
  CHECK(c.grid_object(dx) == Category::grid_hilb(2).grid_object(dx));
  Eigen::MatrixXi dy = dx;
  dy(0, 0) = 2;
  CHECK(c.grid_object(dx) != c.grid_object(dy));

  auto r1 = Category::rep_group(GroupTable::symmetric(3));
  auto r2 = Category::rep_group(GroupTable::symmetric(3));
  CHECK(r1.rep_object(s3_standard_rep()) == r2.rep_object(s3_standard_rep()));
  CHECK(r1.rep_object(s3_standard_rep()) != r1.rep_object(s3_sign_rep()));

  CHECK_THROWS_AS((void)c.unit().tensor(r1.unit()), Error);
}

TEST_CASE("rep_object validation rejects non-representations") {
  auto s3 = GroupTable::symmetric(3);
  auto r = Category::rep_group(s3);
  // translation action on functions over the group is not multiplicative
  // when the table order is scrambled; simplest: wrong matrix at one slot
  auto rep = regular_rep(s3);
  rep[3] = Mat::Identity(6, 6);
  CHECK_THROWS_AS((void)r.rep_object(rep), Error);
  // non-unitary but multiplicative-looking data
  std::vector<Mat> bad{Mat::Identity(2, 2) * 2.0};
  auto tr = Category::rep_group(GroupTable::trivial());
  CHECK_THROWS_AS((void)tr.rep_object(bad), Error);
}
