#include "qsf/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>

namespace qsf {

namespace {

double inf_norm(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace

PolarResult polar_decompose(const Mat& m) {
  if (m.rows() != m.cols())
    throw Error(Error::Kind::Shape, "polar_decompose: matrix is not square");
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat& u = svd.matrixU();
  const Mat& v = svd.matrixV();
  PolarResult out;
  out.positive = u * svd.singularValues().asDiagonal() * u.adjoint();
  out.unitary = u * v.adjoint();
  return out;
}

Mat hermitian_sqrt(const Mat& p, double eps_rel) {
  if (p.rows() != p.cols())
    throw Error(Error::Kind::Shape, "hermitian_sqrt: matrix is not square");
  double scale = inf_norm(p);
  if (inf_norm(p - p.adjoint()) > eps_rel * (1.0 + scale) * 10.0)
    throw Error(Error::Kind::Domain, "hermitian_sqrt: matrix is not hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es((p + p.adjoint()) / 2.0);
  Eigen::VectorXd lam = es.eigenvalues();
  double lmax = lam.size() ? std::max(0.0, lam.maxCoeff()) : 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -eps_rel * std::max(lmax, 1e-30) - 1e-300)
      throw Error(Error::Kind::NotPositive,
                  "hermitian_sqrt: matrix has a negative eigenvalue " +
                      std::to_string(lam(i)));
    lam(i) = std::sqrt(std::max(0.0, lam(i)));
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

LinearSolution solve_linear_subspace(const Mat& a, const Vec& b,
                                     double rank_eps, SolvePolicy policy) {
  if (a.rows() != b.size())
    throw Error(Error::Kind::Shape, "solve_linear_subspace: rhs length mismatch");
  LinearSolution out;
  const Eigen::Index n = a.cols();
  if (a.size() == 0) {
    out.particular = Vec::Zero(n);
    out.nullspace = Mat::Identity(n, n);
    out.residual = b.norm();
  } else {
    // BDCSVD is faster on the larger systems the hom solvers produce
    Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sing = svd.singularValues();
    double smax = sing.size() ? sing(0) : 0.0;
    double cut = rank_eps * std::max(smax, 1e-300);
    int rank = 0;
    while (rank < sing.size() && sing(rank) > cut) ++rank;
    Vec ub = svd.matrixU().adjoint() * b;
    Vec coeff = Vec::Zero(n);
    for (int i = 0; i < rank; ++i) coeff(i) = ub(i) / sing(i);
    out.particular = svd.matrixV() * coeff;
    out.nullspace = svd.matrixV().rightCols(n - rank);
    out.residual = (a * out.particular - b).norm();
    out.rank = rank;
  }
  if (policy == SolvePolicy::RequireConsistent &&
      out.residual > rank_eps * std::max(1.0, b.norm()))
    throw Error(Error::Kind::NoSolution,
                "solve_linear_subspace: inconsistent system, residual " +
                    std::to_string(out.residual));
  return out;
}

IdempotentSplit split_idempotent(const Mat& p, double eps) {
  if (p.rows() != p.cols())
    throw Error(Error::Kind::Shape, "split_idempotent: not square");
  double scale = 1.0 + inf_norm(p);
  if (inf_norm(p * p - p) > eps * scale)
    throw Error(Error::Kind::Domain,
                "split_idempotent: matrix is not idempotent");
  Eigen::JacobiSVD<Mat> svd(p, Eigen::ComputeThinU);
  const auto& sing = svd.singularValues();
  double smax = sing.size() ? sing(0) : 0.0;
  int rank = 0;
  while (rank < sing.size() && sing(rank) > eps * std::max(smax, 1e-300))
    ++rank;
  IdempotentSplit out;
  // columns of w span range(p); p acts as the identity there, so v w = 1
  out.w = svd.matrixU().leftCols(rank);
  out.v = out.w.adjoint() * p;
  return out;
}

SpectralSplit spectral_idempotents(const Mat& x, double cluster_eps,
                                   double verify_eps) {
  if (x.rows() != x.cols())
    throw Error(Error::Kind::Shape, "spectral_idempotents: not square");
  const Eigen::Index n = x.rows();
  SpectralSplit out;
  if (n == 0) return out;

  Eigen::ComplexEigenSolver<Mat> es(x, /*computeEigenvectors=*/false);
  std::vector<cplx> lam(es.eigenvalues().data(),
                        es.eigenvalues().data() + n);
  std::sort(lam.begin(), lam.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<std::vector<cplx>> clusters;
  for (const cplx& l : lam) {
    if (!clusters.empty() &&
        std::abs(l - clusters.back().back()) <
            cluster_eps * (1.0 + std::abs(l))) {
      clusters.back().push_back(l);
    } else {
      clusters.push_back({l});
    }
  }
  for (const auto& c : clusters) {
    cplx mean = 0;
    for (const cplx& l : c) mean += l;
    out.eigenvalues.push_back(mean / double(c.size()));
  }

  const size_t k = clusters.size();
  if (k == 1) {
    out.idempotents.push_back(Mat::Identity(n, n));
    return out;
  }
  for (size_t i = 0; i < k; ++i) {
    Mat p = Mat::Identity(n, n);
    for (size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      p = p * (x - out.eigenvalues[j] * Mat::Identity(n, n)) /
          (out.eigenvalues[i] - out.eigenvalues[j]);
    }
    out.idempotents.push_back(p);
  }

  // Lagrange products are idempotent iff x acts semisimply on each cluster
  Mat sum = Mat::Zero(n, n);
  double scale = 1.0;
  for (const Mat& p : out.idempotents) scale = std::max(scale, inf_norm(p));
  for (const Mat& p : out.idempotents) {
    if (inf_norm(p * p - p) > verify_eps * scale * scale)
      throw Error(Error::Kind::Defective,
                  "spectral_idempotents: operator is not diagonalizable "
                  "across the requested clusters");
    if (inf_norm(p * x - x * p) > verify_eps * scale * (1.0 + inf_norm(x)))
      throw Error(Error::Kind::Defective,
                  "spectral_idempotents: projector does not commute");
    sum += p;
  }
  if (inf_norm(sum - Mat::Identity(n, n)) > verify_eps * scale * double(k))
    throw Error(Error::Kind::Defective,
                "spectral_idempotents: projectors do not sum to identity");
  return out;
}

SolverResult minimize_defect(
    const std::function<RealVec(const RealVec&)>& residual_fn,
    const RealVec& init, const SolverOptions& opts) {
  const Eigen::Index n = init.size();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SolverResult best;
  best.params = init;
  best.residual = residual_fn(init).norm();

  auto jacobian = [&](const RealVec& x, const RealVec& r0) {
    Eigen::MatrixXd j(r0.size(), n);
    RealVec xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      double h = 1e-7 * (1.0 + std::abs(x(i)));
      xp(i) = x(i) + h;
      j.col(i) = (residual_fn(xp) - r0) / h;
      xp(i) = x(i);
    }
    return j;
  };

  int total_iters = 0;
  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    RealVec x = init;
    if (attempt > 0) {
      double sigma = 0.05 * (1.0 + init.norm()) *
                     std::pow(2.0, double(attempt - 1));
      for (Eigen::Index i = 0; i < n; ++i) x(i) = init(i) + sigma * gauss(rng);
      best.restarts_used = attempt;
    }
    RealVec r = residual_fn(x);
    double fx = r.squaredNorm();
    double lambda = 1e-3;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
      ++total_iters;
      if (std::sqrt(fx) <= 1e-2 * opts.target) break;
      Eigen::MatrixXd j = jacobian(x, r);
      Eigen::MatrixXd jtj = j.transpose() * j;
      RealVec g = j.transpose() * r;
      bool accepted = false;
      for (int damp = 0; damp < 25; ++damp) {
        Eigen::MatrixXd m = jtj;
        m.diagonal().array() += lambda;
        RealVec step = m.ldlt().solve(-g);
        RealVec xn = x + step;
        RealVec rn = residual_fn(xn);
        double fn = rn.squaredNorm();
        if (std::isfinite(fn) && fn < fx) {
          x = xn;
          r = rn;
          fx = fn;
          lambda = std::max(lambda * 0.3, 1e-12);
          accepted = true;
          break;
        }
        lambda *= 10.0;
        if (lambda > 1e14) break;
      }
      if (!accepted) break;  // stuck: fall through to the next restart
    }
    double rn = std::sqrt(fx);
    if (rn < best.residual) {
      best.residual = rn;
      best.params = x;
    }
    if (best.residual <= opts.target) break;
  }
  best.iterations = total_iters;
  best.success = best.residual <= opts.target;
  return best;
}

}  // namespace qsf
