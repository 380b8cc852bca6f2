#include "qsf/category.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <utility>

namespace qsf {

// ---------------------------------------------------------------- groups

GroupTable GroupTable::from_table(std::vector<std::vector<int>> table) {
  const int n = int(table.size());
  if (n == 0) throw Error(Error::Kind::Domain, "group: empty table");
  for (const auto& row : table) {
    if (int(row.size()) != n)
      throw Error(Error::Kind::Domain, "group: table is not square");
    for (int v : row)
      if (v < 0 || v >= n)
        throw Error(Error::Kind::Domain, "group: entry out of range");
  }
  int identity = -1;
  for (int e = 0; e < n; ++e) {
    bool ok = true;
    for (int g = 0; g < n && ok; ++g)
      ok = table[e][g] == g && table[g][e] == g;
    if (ok) {
      identity = e;
      break;
    }
  }
  if (identity < 0)
    throw Error(Error::Kind::Domain, "group: no identity element");
  std::vector<int> inverse(n, -1);
  for (int g = 0; g < n; ++g) {
    for (int h = 0; h < n; ++h)
      if (table[g][h] == identity && table[h][g] == identity) {
        inverse[g] = h;
        break;
      }
    if (inverse[g] < 0)
      throw Error(Error::Kind::Domain, "group: missing inverse");
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (table[table[a][b]][c] != table[a][table[b][c]])
          throw Error(Error::Kind::Domain, "group: table is not associative");
  GroupTable g;
  g.mult = std::move(table);
  g.inverse = std::move(inverse);
  g.identity = identity;
  return g;
}

GroupTable GroupTable::trivial() { return cyclic(1); }

GroupTable GroupTable::cyclic(int n) {
  if (n <= 0) throw Error(Error::Kind::Domain, "cyclic: order must be positive");
  std::vector<std::vector<int>> t(n, std::vector<int>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) t[a][b] = (a + b) % n;
  return from_table(std::move(t));
}

GroupTable GroupTable::symmetric(int n) {
  if (n <= 0 || n > 6)
    throw Error(Error::Kind::Domain, "symmetric: supported degrees are 1..6");
  std::vector<std::vector<int>> perms;
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  std::map<std::vector<int>, int> index;
  for (size_t i = 0; i < perms.size(); ++i) index[perms[i]] = int(i);
  const int ord = int(perms.size());
  std::vector<std::vector<int>> t(ord, std::vector<int>(ord));
  for (int a = 0; a < ord; ++a)
    for (int b = 0; b < ord; ++b) {
      std::vector<int> c(n);
      for (int x = 0; x < n; ++x) c[x] = perms[a][perms[b][x]];
      t[a][b] = index.at(c);
    }
  return from_table(std::move(t));
}

// ------------------------------------------------------------- obj model

namespace {

struct GridPath {
  std::vector<int> nodes;  // m+1 grid indices
  std::vector<int> cells;  // m within-cell indices
};

uint64_t fnv_bytes(uint64_t h, const void* data, size_t len) {
  const unsigned char* b = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= b[i];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t fnv_int(uint64_t h, int64_t v) { return fnv_bytes(h, &v, sizeof v); }

bool grids_equal(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::equal(a.data(), a.data() + a.size(), b.data());
}

bool mats_bitwise_equal(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 ||
         std::memcmp(a.data(), b.data(), sizeof(cplx) * a.size()) == 0;
}

}  // namespace

struct CatImpl {
  Backend backend = Backend::GridHilb;
  int n = 1;
  GroupTable group;

  bool equal(const CatImpl& o) const {
    if (backend != o.backend) return false;
    if (backend == Backend::GridHilb) return n == o.n;
    return group == o.group;
  }
};

using RepAtom = std::shared_ptr<const std::vector<Mat>>;

struct ObjImpl {
  std::shared_ptr<const CatImpl> cat;
  // GridHilb payload
  std::vector<Eigen::MatrixXi> word_grid;
  std::vector<GridPath> paths;
  // RepG payload
  std::vector<RepAtom> word_rep;
  // folded Kronecker products, built lazily per group element: a long
  // word would otherwise cost dim^2 storage the moment it is formed
  mutable std::vector<Mat> rep;
  mutable std::vector<char> rep_done;
  int dim = 0;
  std::vector<int> gstart, gend;
  Eigen::MatrixXi grade_off, grade_cnt;
  uint64_t hash = 0;

  static Obj make(std::shared_ptr<const ObjImpl> impl) { return Obj(std::move(impl)); }
  static const ObjImpl& of(const Obj& o) { return *o.impl_; }
};

namespace {

// Canonical path order of a grid word: lexicographic in the key
// (first node, last node, inner nodes..., cell indices...).  Nested
// loops in that order generate it directly; the resulting blocks of a
// fixed (first,last) grade are contiguous.
std::vector<GridPath> enumerate_paths(const std::vector<Eigen::MatrixXi>& word,
                                      int n) {
  std::vector<GridPath> out;
  const int m = int(word.size());
  if (m == 0) {
    for (int i = 0; i < n; ++i) out.push_back({{i}, {}});
    return out;
  }
  std::vector<int> nodes(m + 1);
  std::vector<int> cells(m);
  std::function<void(int)> fill_cells = [&](int t) {
    if (t == m) {
      out.push_back({nodes, cells});
      return;
    }
    const int d = word[t](nodes[t], nodes[t + 1]);
    for (int a = 0; a < d; ++a) {
      cells[t] = a;
      fill_cells(t + 1);
    }
  };
  std::function<void(int)> pick = [&](int k) {
    if (k == m + 1) {
      fill_cells(0);
      return;
    }
    const int pos = (k == 0) ? 0 : (k == 1 ? m : k - 1);
    for (int v = 0; v < n; ++v) {
      nodes[pos] = v;
      pick(k + 1);
    }
  };
  pick(0);
  return out;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  if (out.size() == 0) return out;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

std::shared_ptr<const ObjImpl> build_grid_impl(
    std::shared_ptr<const CatImpl> cat, std::vector<Eigen::MatrixXi> word) {
  auto impl = std::make_shared<ObjImpl>();
  impl->cat = std::move(cat);
  const int n = impl->cat->n;
  impl->word_grid = std::move(word);
  impl->paths = enumerate_paths(impl->word_grid, n);
  impl->dim = int(impl->paths.size());
  impl->gstart.resize(impl->dim);
  impl->gend.resize(impl->dim);
  impl->grade_off = Eigen::MatrixXi::Zero(n, n);
  impl->grade_cnt = Eigen::MatrixXi::Zero(n, n);
  for (int k = 0; k < impl->dim; ++k) {
    const int i = impl->paths[k].nodes.front();
    const int j = impl->paths[k].nodes.back();
    impl->gstart[k] = i;
    impl->gend[k] = j;
    if (impl->grade_cnt(i, j) == 0) impl->grade_off(i, j) = k;
    impl->grade_cnt(i, j) += 1;
  }
  uint64_t h = 1469598103934665603ull;
  h = fnv_int(h, 0);  // backend tag
  h = fnv_int(h, n);
  h = fnv_int(h, int64_t(impl->word_grid.size()));
  for (const auto& g : impl->word_grid)
    h = fnv_bytes(h, g.data(), sizeof(int) * g.size());
  impl->hash = h;
  return impl;
}

std::shared_ptr<const ObjImpl> build_rep_impl(
    std::shared_ptr<const CatImpl> cat, std::vector<RepAtom> word) {
  auto impl = std::make_shared<ObjImpl>();
  impl->cat = std::move(cat);
  const int ord = impl->cat->group.order();
  impl->word_rep = std::move(word);
  impl->rep.assign(ord, Mat());
  impl->rep_done.assign(ord, 0);
  impl->dim = 1;
  for (const RepAtom& a : impl->word_rep) impl->dim *= int((*a)[0].rows());
  impl->gstart.assign(impl->dim, 0);
  impl->gend.assign(impl->dim, 0);
  impl->grade_off = Eigen::MatrixXi::Zero(1, 1);
  impl->grade_cnt = Eigen::MatrixXi::Constant(1, 1, impl->dim);
  uint64_t h = 1469598103934665603ull;
  h = fnv_int(h, 1);  // backend tag
  h = fnv_int(h, ord);
  for (const auto& row : impl->cat->group.mult)
    for (int v : row) h = fnv_int(h, v);
  h = fnv_int(h, int64_t(impl->word_rep.size()));
  for (const RepAtom& a : impl->word_rep) {
    h = fnv_int(h, int64_t((*a)[0].rows()));
    for (const Mat& m : *a)
      if (m.size()) h = fnv_bytes(h, m.data(), sizeof(cplx) * m.size());
  }
  impl->hash = h;
  return impl;
}

}  // namespace

// ------------------------------------------------------------- Category

Category::Category(std::shared_ptr<const CatImpl> impl) : impl_(std::move(impl)) {}

Category Category::grid_hilb(int n) {
  if (n <= 0)
    throw Error(Error::Kind::Domain, "grid_hilb: size must be positive");
  auto impl = std::make_shared<CatImpl>();
  impl->backend = Backend::GridHilb;
  impl->n = n;
  return Category(impl);
}

Category Category::rep_group(const GroupTable& g) {
  auto impl = std::make_shared<CatImpl>();
  impl->backend = Backend::RepG;
  impl->group = GroupTable::from_table(g.mult);  // re-validate
  impl->n = 1;
  return Category(impl);
}

Backend Category::backend() const { return impl_->backend; }

int Category::grid_size() const {
  if (impl_->backend != Backend::GridHilb)
    throw Error(Error::Kind::Domain, "grid_size: not a grid category");
  return impl_->n;
}

const GroupTable& Category::group() const {
  if (impl_->backend != Backend::RepG)
    throw Error(Error::Kind::Domain, "group: not a representation category");
  return impl_->group;
}

bool Category::operator==(const Category& o) const {
  return impl_ == o.impl_ || impl_->equal(*o.impl_);
}

Obj Category::unit() const {
  if (impl_->backend == Backend::GridHilb)
    return ObjImpl::make(build_grid_impl(impl_, {}));
  return ObjImpl::make(build_rep_impl(impl_, {}));
}

Obj Category::grid_object(const Eigen::MatrixXi& dims) const {
  if (impl_->backend != Backend::GridHilb)
    throw Error(Error::Kind::Domain, "grid_object: not a grid category");
  if (dims.rows() != impl_->n || dims.cols() != impl_->n)
    throw Error(Error::Kind::Shape, "grid_object: dims must be n x n");
  if ((dims.array() < 0).any())
    throw Error(Error::Kind::Domain, "grid_object: negative cell dimension");
  return ObjImpl::make(build_grid_impl(impl_, {dims}));
}

Obj Category::rep_object(const std::vector<Mat>& rep, double eps) const {
  if (impl_->backend != Backend::RepG)
    throw Error(Error::Kind::Domain, "rep_object: not a representation category");
  const int ord = impl_->group.order();
  if (int(rep.size()) != ord)
    throw Error(Error::Kind::Shape, "rep_object: need one matrix per element");
  const Eigen::Index d = rep.empty() ? 0 : rep[0].rows();
  for (const Mat& m : rep)
    if (m.rows() != d || m.cols() != d)
      throw Error(Error::Kind::Shape, "rep_object: inconsistent matrix sizes");
  double scale = 1.0;
  for (const Mat& m : rep)
    if (m.size()) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  const double tol = eps * scale * scale * std::max<double>(1, d);
  for (int g = 0; g < ord; ++g) {
    if (d > 0 &&
        (rep[g] * rep[g].adjoint() - Mat::Identity(d, d)).cwiseAbs().maxCoeff() >
            tol)
      throw Error(Error::Kind::Domain, "rep_object: matrix " +
                                           std::to_string(g) + " is not unitary");
    for (int h = 0; h < ord; ++h) {
      const Mat lhs = rep[g] * rep[h];
      const Mat& rhs = rep[impl_->group.mult[g][h]];
      if (d > 0 && (lhs - rhs).cwiseAbs().maxCoeff() > tol)
        throw Error(Error::Kind::Domain,
                    "rep_object: multiplicativity fails at pair (" +
                        std::to_string(g) + "," + std::to_string(h) + ")");
    }
  }
  auto atom = std::make_shared<const std::vector<Mat>>(rep);
  return ObjImpl::make(build_rep_impl(impl_, {atom}));
}

// ------------------------------------------------------------------ Obj

Category Obj::category() const { return Category(impl_->cat); }

Backend Obj::backend() const { return impl_->cat->backend; }

int Obj::dim() const { return impl_->dim; }

Obj Obj::tensor(const Obj& o) const {
  if (!(impl_->cat->equal(*o.impl_->cat)))
    throw Error(Error::Kind::Domain, "tensor: different categories");
  if (impl_->cat->backend == Backend::GridHilb) {
    std::vector<Eigen::MatrixXi> word = impl_->word_grid;
    word.insert(word.end(), o.impl_->word_grid.begin(), o.impl_->word_grid.end());
    return ObjImpl::make(build_grid_impl(impl_->cat, std::move(word)));
  }
  std::vector<RepAtom> word = impl_->word_rep;
  word.insert(word.end(), o.impl_->word_rep.begin(), o.impl_->word_rep.end());
  return ObjImpl::make(build_rep_impl(impl_->cat, std::move(word)));
}

Obj Obj::dual() const {
  if (impl_->cat->backend == Backend::GridHilb) {
    std::vector<Eigen::MatrixXi> word;
    for (auto it = impl_->word_grid.rbegin(); it != impl_->word_grid.rend(); ++it)
      word.push_back(it->transpose());
    return ObjImpl::make(build_grid_impl(impl_->cat, std::move(word)));
  }
  std::vector<RepAtom> word;
  for (const RepAtom& a : impl_->word_rep) {
    std::vector<Mat> conj;
    conj.reserve(a->size());
    for (const Mat& m : *a) conj.push_back(m.conjugate());
    word.push_back(std::make_shared<const std::vector<Mat>>(std::move(conj)));
  }
  return ObjImpl::make(build_rep_impl(impl_->cat, std::move(word)));
}

int Obj::grade_count() const {
  return impl_->cat->backend == Backend::GridHilb ? impl_->cat->n : 1;
}

int Obj::grade_start(int k) const { return impl_->gstart.at(k); }
int Obj::grade_end(int k) const { return impl_->gend.at(k); }

std::pair<int, int> Obj::grade_range(int i, int j) const {
  return {impl_->grade_off(i, j), impl_->grade_cnt(i, j)};
}

Eigen::MatrixXi Obj::dims_grid() const { return impl_->grade_cnt; }

const Mat& Obj::rep_matrix(int g) const {
  if (impl_->cat->backend != Backend::RepG)
    throw Error(Error::Kind::Domain, "rep_matrix: not a representation object");
  if (!impl_->rep_done.at(g)) {
    Mat m = Mat::Ones(1, 1);
    for (const RepAtom& a : impl_->word_rep) m = kron(m, (*a)[g]);
    impl_->rep[g] = std::move(m);
    impl_->rep_done[g] = 1;
  }
  return impl_->rep[g];
}

bool Obj::operator==(const Obj& o) const {
  if (impl_ == o.impl_) return true;
  if (!impl_ || !o.impl_) return false;
  if (impl_->hash != o.impl_->hash) return false;
  if (!impl_->cat->equal(*o.impl_->cat)) return false;
  if (impl_->cat->backend == Backend::GridHilb) {
    if (impl_->word_grid.size() != o.impl_->word_grid.size()) return false;
    for (size_t t = 0; t < impl_->word_grid.size(); ++t)
      if (!grids_equal(impl_->word_grid[t], o.impl_->word_grid[t])) return false;
    return true;
  }
  if (impl_->word_rep.size() != o.impl_->word_rep.size()) return false;
  for (size_t t = 0; t < impl_->word_rep.size(); ++t) {
    const RepAtom& a = impl_->word_rep[t];
    const RepAtom& b = o.impl_->word_rep[t];
    if (a == b) continue;
    for (size_t g = 0; g < a->size(); ++g)
      if (!mats_bitwise_equal((*a)[g], (*b)[g])) return false;
  }
  return true;
}

// ------------------------------------------------------------------ Mor

Mor::Mor(const Obj& dom, const Obj& cod, Mat m)
    : dom_(dom), cod_(cod), m_(std::move(m)) {
  if (!dom_.valid() || !cod_.valid())
    throw Error(Error::Kind::Domain, "Mor: invalid endpoint object");
  if (m_.rows() != cod_.dim() || m_.cols() != dom_.dim())
    throw Error(Error::Kind::Shape, "Mor: matrix is " + std::to_string(m_.rows()) +
                                        "x" + std::to_string(m_.cols()) +
                                        ", expected " + std::to_string(cod_.dim()) +
                                        "x" + std::to_string(dom_.dim()));
}

namespace {

// rho_o(g) . x (or rho_o(g)^T . x) with the Kronecker factors applied
// one atom at a time through reshapes, so the folded matrix of a long
// word is never formed.  All atoms are square (unitary reps).
Mat apply_word_rep(const Obj& o, int g, const Mat& x, bool transpose_rep) {
  const auto& atoms = ObjImpl::of(o).word_rep;
  if (atoms.empty() || x.size() == 0) return x;
  const int m = (int)atoms.size();
  std::vector<int> d(m);
  int total = 1;
  for (int t = 0; t < m; ++t) {
    d[t] = int((*atoms[t])[g].rows());
    total *= d[t];
  }
  using RowMat =
      Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Mat out(x.rows(), x.cols());
  Vec cur, nxt(total);
  for (int c = 0; c < x.cols(); ++c) {
    cur = x.col(c);
    // the word folds left, so the last atom's index varies fastest;
    // walk the atoms from the inside out
    int left = total;
    int right = 1;
    for (int t = m - 1; t >= 0; --t) {
      left /= d[t];
      const Mat a = transpose_rep ? Mat((*atoms[t])[g].transpose())
                                  : (*atoms[t])[g];
      for (int l = 0; l < left; ++l) {
        Eigen::Map<const RowMat> blk(cur.data() + (long)l * d[t] * right,
                                     d[t], right);
        Eigen::Map<RowMat> dst(nxt.data() + (long)l * d[t] * right, d[t],
                               right);
        dst = a * blk;
      }
      right *= d[t];
      std::swap(cur, nxt);
    }
    out.col(c) = cur;
  }
  return out;
}

}  // namespace

Mor Mor::checked(const Obj& dom, const Obj& cod, const Mat& m, double eps) {
  Mor f(dom, cod, m);
  double scale = 1.0 + (m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  if (dom.backend() == Backend::GridHilb) {
    for (int c = 0; c < dom.dim(); ++c)
      for (int r = 0; r < cod.dim(); ++r) {
        const bool allowed = dom.grade_start(c) == cod.grade_start(r) &&
                             dom.grade_end(c) == cod.grade_end(r);
        if (!allowed && std::abs(f.m_(r, c)) > eps * scale)
          throw Error(Error::Kind::Domain,
                      "Mor: entry outside the matching-grade blocks");
        if (!allowed) f.m_(r, c) = 0.0;  // snap dust so grading is exact
      }
    return f;
  }
  const int ord = dom.category().group().order();
  // small objects go through the cached folded matrices; large ones are
  // applied atom by atom to avoid quadratic storage
  constexpr int kFoldLimit = 256;
  for (int g = 0; g < ord; ++g) {
    const Mat lhs = cod.dim() <= kFoldLimit
                        ? Mat(cod.rep_matrix(g) * f.m_)
                        : apply_word_rep(cod, g, f.m_, false);
    const Mat rhs =
        dom.dim() <= kFoldLimit
            ? Mat(f.m_ * dom.rep_matrix(g))
            : Mat(apply_word_rep(dom, g, f.m_.transpose(), true).transpose());
    if (lhs.size() &&
        (lhs - rhs).cwiseAbs().maxCoeff() > eps * scale * dom.dim())
      throw Error(Error::Kind::Domain, "Mor: matrix is not an intertwiner");
  }
  return f;
}

Mor Mor::identity(const Obj& x) {
  return Mor(x, x, Mat::Identity(x.dim(), x.dim()));
}

Mor Mor::zero(const Obj& dom, const Obj& cod) {
  return Mor(dom, cod, Mat::Zero(cod.dim(), dom.dim()));
}

Mor Mor::operator*(const Mor& g) const {
  if (dom_ != g.cod_)
    throw Error(Error::Kind::Shape, "compose: middle objects differ");
  return Mor(g.dom_, cod_, m_ * g.m_);
}

Mor Mor::adjoint() const { return Mor(cod_, dom_, m_.adjoint()); }

Mor Mor::operator+(const Mor& g) const {
  if (dom_ != g.dom_ || cod_ != g.cod_)
    throw Error(Error::Kind::Shape, "add: endpoint mismatch");
  return Mor(dom_, cod_, m_ + g.m_);
}

Mor Mor::operator-(const Mor& g) const {
  if (dom_ != g.dom_ || cod_ != g.cod_)
    throw Error(Error::Kind::Shape, "subtract: endpoint mismatch");
  return Mor(dom_, cod_, m_ - g.m_);
}

namespace {

GridPath concat_paths(const GridPath& a, const GridPath& b) {
  GridPath out;
  out.nodes = a.nodes;
  out.nodes.insert(out.nodes.end(), b.nodes.begin() + 1, b.nodes.end());
  out.cells = a.cells;
  out.cells.insert(out.cells.end(), b.cells.begin(), b.cells.end());
  return out;
}

// Index of each composable path pair of (a, b) inside the canonical
// basis of the concatenated word t; -1 for non-composable pairs.
std::vector<std::vector<int>> pair_index(const Obj& a, const Obj& b,
                                         const Obj& t) {
  const ObjImpl& ai = ObjImpl::of(a);
  const ObjImpl& bi = ObjImpl::of(b);
  const ObjImpl& ti = ObjImpl::of(t);
  std::map<std::pair<std::vector<int>, std::vector<int>>, int> lookup;
  for (int k = 0; k < ti.dim; ++k)
    lookup[{ti.paths[k].nodes, ti.paths[k].cells}] = k;
  std::vector<std::vector<int>> idx(ai.dim, std::vector<int>(bi.dim, -1));
  for (int i = 0; i < ai.dim; ++i)
    for (int j = 0; j < bi.dim; ++j) {
      if (ai.gend[i] != bi.gstart[j]) continue;
      GridPath c = concat_paths(ai.paths[i], bi.paths[j]);
      idx[i][j] = lookup.at({c.nodes, c.cells});
    }
  return idx;
}

}  // namespace

Mor Mor::tensor(const Mor& g) const {
  const Obj dom = dom_.tensor(g.dom_);
  const Obj cod = cod_.tensor(g.cod_);
  if (dom_.backend() == Backend::RepG) {
    return Mor(dom, cod, kron(m_, g.m_));
  }
  Mat out = Mat::Zero(cod.dim(), dom.dim());
  const auto ci = pair_index(cod_, g.cod_, cod);
  const auto di = pair_index(dom_, g.dom_, dom);
  for (int qa = 0; qa < cod_.dim(); ++qa)
    for (int qb = 0; qb < g.cod_.dim(); ++qb) {
      if (ci[qa][qb] < 0) continue;
      for (int pa = 0; pa < dom_.dim(); ++pa)
        for (int pb = 0; pb < g.dom_.dim(); ++pb) {
          if (di[pa][pb] < 0) continue;
          out(ci[qa][qb], di[pa][pb]) = m_(qa, pa) * g.m_(qb, pb);
        }
    }
  return Mor(dom, cod, std::move(out));
}

// ----------------------------------------------------------- hom spaces

std::vector<Mor> hom_basis(const Obj& x, const Obj& y) {
  if (x.category() != y.category())
    throw Error(Error::Kind::Domain, "hom_basis: different categories");
  std::vector<Mor> out;
  if (x.dim() == 0 || y.dim() == 0) return out;
  if (x.backend() == Backend::GridHilb) {
    const int n = x.grade_count();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const auto [xo, xc] = x.grade_range(i, j);
        const auto [yo, yc] = y.grade_range(i, j);
        for (int p = 0; p < xc; ++p)
          for (int q = 0; q < yc; ++q) {
            Mat m = Mat::Zero(y.dim(), x.dim());
            m(yo + q, xo + p) = 1.0;
            out.emplace_back(x, y, std::move(m));
          }
      }
    return out;
  }
  const GroupTable& grp = x.category().group();
  const int dx = x.dim(), dy = y.dim();
  Mat avg = Mat::Zero(dx * dy, dx * dy);
  for (int g = 0; g < grp.order(); ++g)
    avg += kron(x.rep_matrix(g).conjugate(), y.rep_matrix(g));
  avg /= double(grp.order());
  Eigen::SelfAdjointEigenSolver<Mat> es((avg + avg.adjoint()) / 2.0);
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) < 0.5) continue;
    Mat f(dy, dx);
    for (int c = 0; c < dx; ++c) f.col(c) = es.eigenvectors().col(k).segment(c * dy, dy);
    out.emplace_back(x, y, std::move(f));
  }
  return out;
}

cplx frobenius_inner(const Mor& f, const Mor& g) {
  if (f.dom() != g.dom() || f.cod() != g.cod())
    throw Error(Error::Kind::Shape, "frobenius_inner: endpoint mismatch");
  return (f.mat().adjoint() * g.mat()).trace();
}

cplx tau(const Mor& f) {
  const Obj unit = f.dom().category().unit();
  if (f.dom() != unit || f.cod() != unit)
    throw Error(Error::Kind::Domain, "tau: not an endomorphism of the unit");
  return f.mat().trace();
}

// -------------------------------------------------------------- duality

namespace {

GridPath reverse_path(const GridPath& p) {
  GridPath r;
  r.nodes.assign(p.nodes.rbegin(), p.nodes.rend());
  r.cells.assign(p.cells.rbegin(), p.cells.rend());
  return r;
}

}  // namespace

DualitySolution balanced_duality(const Obj& x) {
  if (x.dim() == 0)
    throw Error(Error::Kind::Domain, "balanced_duality: zero object");
  DualitySolution sol;
  sol.obj = x;
  sol.dual = x.dual();
  const Obj unit = x.category().unit();
  const Obj dx_x = sol.dual.tensor(x);
  const Obj x_dx = x.tensor(sol.dual);
  Mat gm = Mat::Zero(dx_x.dim(), unit.dim());
  Mat gb = Mat::Zero(x_dx.dim(), unit.dim());
  if (x.backend() == Backend::GridHilb) {
    const ObjImpl& xi = ObjImpl::of(x);
    const ObjImpl& di = ObjImpl::of(sol.dual);
    std::map<std::pair<std::vector<int>, std::vector<int>>, int> dual_idx;
    for (int k = 0; k < di.dim; ++k)
      dual_idx[{di.paths[k].nodes, di.paths[k].cells}] = k;
    const auto pi_dxx = pair_index(sol.dual, x, dx_x);
    const auto pi_xdx = pair_index(x, sol.dual, x_dx);
    for (int k = 0; k < xi.dim; ++k) {
      GridPath r = reverse_path(xi.paths[k]);
      const int rk = dual_idx.at({r.nodes, r.cells});
      gm(pi_dxx[rk][k], xi.gend[k]) = 1.0;
      gb(pi_xdx[k][rk], xi.gstart[k]) = 1.0;
    }
  } else {
    const int d = x.dim();
    for (int a = 0; a < d; ++a) {
      gm(a * d + a, 0) = 1.0;
      gb(a * d + a, 0) = 1.0;
    }
  }
  sol.gamma = Mor(unit, dx_x, std::move(gm));
  sol.gamma_bar = Mor(unit, x_dx, std::move(gb));
  return sol;
}

ScalarDimension scalar_dimension(const Obj& x) {
  if (x.dim() == 0)
    throw Error(Error::Kind::Domain, "scalar_dimension: zero object");
  auto sol = balanced_duality(x);
  ScalarDimension out;
  out.total = std::real(tau(sol.gamma.adjoint() * sol.gamma));
  out.per_cell = x.dims_grid().cast<double>();
  return out;
}

DualityComparison compare_duality(const DualitySolution& a,
                                  const DualitySolution& b, double eps) {
  DualityComparison out;
  if (a.obj != b.obj || a.dual != b.dual) return out;
  const Obj& x = a.obj;
  const Obj& xb = a.dual;
  const Mor ix = Mor::identity(x);
  const Mor ixb = Mor::identity(xb);
  const double scale = 1.0 + b.gamma.mat().cwiseAbs().maxCoeff();

  auto unitarity = [&](const Mor& u) {
    const Mat uu = u.mat().adjoint() * u.mat();
    const Mat vv = u.mat() * u.mat().adjoint();
    const Mat id = Mat::Identity(u.mat().rows(), u.mat().cols());
    return std::max((uu - id).cwiseAbs().maxCoeff(),
                    (vv - id).cwiseAbs().maxCoeff());
  };
  auto dev = [](const Mor& f, const Mor& g) {
    return (f.mat() - g.mat()).cwiseAbs().maxCoeff();
  };

  // direct form: b.γ = (1 ⊗ u) a.γ and b.γ̄ = (u ⊗ 1) a.γ̄ with u on X
  {
    const Mor u = (a.gamma_bar.adjoint().tensor(ix)) * (ix.tensor(b.gamma));
    const double r = std::max({dev(b.gamma, ixb.tensor(u) * a.gamma),
                               dev(b.gamma_bar, u.tensor(ixb) * a.gamma_bar),
                               unitarity(u)});
    if (r <= eps * scale) {
      out.equivalent = true;
      out.mirrored = false;
      out.u = u;
      out.residual = r;
      return out;
    }
    out.residual = r;
  }
  // mirrored form: b.γ = (ū ⊗ 1) a.γ and b.γ̄ = (1 ⊗ ū) a.γ̄ with ū on X̄
  {
    const Mor ub = (ixb.tensor(a.gamma_bar.adjoint())) * (b.gamma.tensor(ixb));
    const double r = std::max({dev(b.gamma, ub.tensor(ix) * a.gamma),
                               dev(b.gamma_bar, ix.tensor(ub) * a.gamma_bar),
                               unitarity(ub)});
    if (r <= eps * scale) {
      out.equivalent = true;
      out.mirrored = true;
      out.u = ub;
      out.residual = r;
      return out;
    }
    out.residual = std::min(out.residual, r);
  }
  return out;
}

// ------------------------------------------------- splitting and sums

MorSplit split_idempotent(const Mor& p, double eps) {
  if (p.dom() != p.cod())
    throw Error(Error::Kind::Shape, "split_idempotent: not an endomorphism");
  const Obj& x = p.dom();
  const double scale = 1.0 + (p.mat().size() ? p.mat().cwiseAbs().maxCoeff() : 0.0);
  if (p.mat().size() &&
      (p.mat() * p.mat() - p.mat()).cwiseAbs().maxCoeff() > eps * scale)
    throw Error(Error::Kind::Domain, "split_idempotent: morphism is not idempotent");

  MorSplit out;
  if (x.backend() == Backend::GridHilb) {
    const int n = x.grade_count();
    Eigen::MatrixXi dims = Eigen::MatrixXi::Zero(n, n);
    std::vector<std::vector<IdempotentSplit>> blocks(n);
    for (int i = 0; i < n; ++i) {
      blocks[i].resize(n);
      for (int j = 0; j < n; ++j) {
        const auto [off, cnt] = x.grade_range(i, j);
        if (cnt == 0) continue;
        blocks[i][j] = qsf::split_idempotent(
            Mat(p.mat().block(off, off, cnt, cnt)), eps);
        dims(i, j) = int(blocks[i][j].v.rows());
      }
    }
    out.image = x.category().grid_object(dims);
    Mat v = Mat::Zero(out.image.dim(), x.dim());
    Mat w = Mat::Zero(x.dim(), out.image.dim());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (dims(i, j) == 0) continue;
        const auto [xo, xc] = x.grade_range(i, j);
        const auto [to, tc] = out.image.grade_range(i, j);
        v.block(to, xo, tc, xc) = blocks[i][j].v;
        w.block(xo, to, xc, tc) = blocks[i][j].w;
      }
    out.v = Mor(x, out.image, std::move(v));
    out.w = Mor(out.image, x, std::move(w));
    return out;
  }

  const auto sp = qsf::split_idempotent(p.mat(), eps);
  const GroupTable& grp = x.category().group();
  std::vector<Mat> rep(grp.order());
  for (int g = 0; g < grp.order(); ++g)
    rep[g] = sp.w.adjoint() * x.rep_matrix(g) * sp.w;
  out.image = x.category().rep_object(rep);
  out.v = Mor(x, out.image, sp.v);
  out.w = Mor(out.image, x, sp.w);
  return out;
}

DirectSum direct_sum(const std::vector<Obj>& parts) {
  if (parts.empty())
    throw Error(Error::Kind::Domain, "direct_sum: no summands");
  const Category cat = parts[0].category();
  for (const Obj& p : parts)
    if (p.category() != cat)
      throw Error(Error::Kind::Domain, "direct_sum: mixed categories");

  DirectSum out;
  if (cat.backend() == Backend::GridHilb) {
    const int n = cat.grid_size();
    Eigen::MatrixXi dims = Eigen::MatrixXi::Zero(n, n);
    for (const Obj& p : parts) dims += p.dims_grid();
    out.total = cat.grid_object(dims);
    Eigen::MatrixXi used = Eigen::MatrixXi::Zero(n, n);
    for (const Obj& p : parts) {
      Mat inj = Mat::Zero(out.total.dim(), p.dim());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const auto [po, pc] = p.grade_range(i, j);
          const auto [to, tc] = out.total.grade_range(i, j);
          (void)tc;
          for (int k = 0; k < pc; ++k)
            inj(to + used(i, j) + k, po + k) = 1.0;
          used(i, j) += pc;
        }
      out.injections.emplace_back(p, out.total, std::move(inj));
    }
    return out;
  }

  const GroupTable& grp = cat.group();
  int total_dim = 0;
  for (const Obj& p : parts) total_dim += p.dim();
  std::vector<Mat> rep(grp.order(), Mat::Zero(total_dim, total_dim));
  int off = 0;
  for (const Obj& p : parts) {
    for (int g = 0; g < grp.order(); ++g)
      rep[g].block(off, off, p.dim(), p.dim()) = p.rep_matrix(g);
    off += p.dim();
  }
  out.total = cat.rep_object(rep);
  off = 0;
  for (const Obj& p : parts) {
    Mat inj = Mat::Zero(total_dim, p.dim());
    inj.block(off, 0, p.dim(), p.dim()) = Mat::Identity(p.dim(), p.dim());
    out.injections.emplace_back(p, out.total, std::move(inj));
    off += p.dim();
  }
  return out;
}

Eigen::MatrixXi tensor_pair_table(const Obj& x, const Obj& y) {
  if (x.category() != y.category())
    throw Error(Error::Kind::Shape, "tensor_pair_table: category mismatch");
  Eigen::MatrixXi table(x.dim(), y.dim());
  if (x.backend() == Backend::RepG) {
    for (int i = 0; i < x.dim(); ++i)
      for (int j = 0; j < y.dim(); ++j) table(i, j) = i * y.dim() + j;
    return table;
  }
  const auto idx = pair_index(x, y, x.tensor(y));
  for (int i = 0; i < x.dim(); ++i)
    for (int j = 0; j < y.dim(); ++j) table(i, j) = idx[i][j];
  return table;
}

Mor compose_right_leg(const Mor& tail, const Mor& f, const Obj& z) {
  if (tail.dom() != f.cod().tensor(z))
    throw Error(Error::Kind::Shape,
                "compose_right_leg: tail domain must be cod(f) (x) z");
  const Obj dom = f.dom().tensor(z);
  const auto td = tensor_pair_table(f.dom(), z);
  const auto tc = tensor_pair_table(f.cod(), z);
  Mat r = Mat::Zero(tail.cod().dim(), dom.dim());
  for (int j = 0; j < f.dom().dim(); ++j)
    for (int q = 0; q < f.cod().dim(); ++q) {
      if (f.mat()(q, j) == 0.0) continue;
      for (int k = 0; k < z.dim(); ++k) {
        if (td(j, k) < 0 || tc(q, k) < 0) continue;
        r.col(td(j, k)) += f.mat()(q, j) * tail.mat().col(tc(q, k));
      }
    }
  return Mor::checked(dom, tail.cod(), r);
}

Mor compose_left_leg(const Mor& tail, const Obj& z, const Mor& f) {
  if (tail.dom() != z.tensor(f.cod()))
    throw Error(Error::Kind::Shape,
                "compose_left_leg: tail domain must be z (x) cod(f)");
  const Obj dom = z.tensor(f.dom());
  const auto td = tensor_pair_table(z, f.dom());
  const auto tc = tensor_pair_table(z, f.cod());
  Mat r = Mat::Zero(tail.cod().dim(), dom.dim());
  for (int j = 0; j < f.dom().dim(); ++j)
    for (int q = 0; q < f.cod().dim(); ++q) {
      if (f.mat()(q, j) == 0.0) continue;
      for (int k = 0; k < z.dim(); ++k) {
        if (td(k, j) < 0 || tc(k, q) < 0) continue;
        r.col(td(k, j)) += f.mat()(q, j) * tail.mat().col(tc(k, q));
      }
    }
  return Mor::checked(dom, tail.cod(), r);
}

}  // namespace qsf
