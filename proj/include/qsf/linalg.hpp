#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsf {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

struct Tolerance {
  double verify_eps = 1e-10;   // residual bound for property checks
  double solver_eps = 1e-8;    // convergence target for numeric searches
  double cluster_eps = 1e-7;   // eigenvalue clustering / rank cutoff scale
};

struct Error : std::runtime_error {
  enum class Kind {
    Shape,          // dimension mismatch between operands
    Domain,         // input violates a mathematical precondition
    NotPositive,    // materially negative spectrum where PSD was required
    NoSolution,     // linear system is inconsistent
    Defective,      // spectral split requested for a non-diagonalizable operator
    NotInvertible,  // inverse required but the operator is singular
    Solver,         // numeric search failed to reach its target
    Parse,          // malformed serialized input
    Internal        // invariant broken inside the library itself
  };
  Kind kind;
  Error(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Left polar decomposition of a square matrix: m = positive * unitary
// with positive = sqrt(m m*) hermitian PSD and unitary truly unitary
// (also on a singular m, where the factor is completed arbitrarily).
struct PolarResult {
  Mat positive;
  Mat unitary;
};
PolarResult polar_decompose(const Mat& m);

// Square root of a positive semidefinite hermitian matrix.  Eigenvalue
// dust below -eps_rel * |p| is clamped to zero; anything more negative
// raises Error::NotPositive, a non-hermitian input Error::Domain.
Mat hermitian_sqrt(const Mat& p, double eps_rel = 1e-10);

// Affine solution set of a x = b: the minimum-norm least-squares point,
// an orthonormal basis of ker(a) to translate by, and the attained
// residual |a x - b|.  The default policy raises Error::NoSolution when
// the system is inconsistent; LeastSquares returns the best fit instead.
enum class SolvePolicy { RequireConsistent, LeastSquares };
struct LinearSolution {
  Vec particular;
  Mat nullspace;
  double residual = 0.0;
  int rank = 0;
};
LinearSolution solve_linear_subspace(
    const Mat& a, const Vec& b, double rank_eps = 1e-7,
    SolvePolicy policy = SolvePolicy::RequireConsistent);

// Factor an idempotent p as w * v with v * w the identity on the range.
// v has rank(p) rows; w's columns are an orthonormal basis of range(p).
struct IdempotentSplit {
  Mat v;
  Mat w;
};
IdempotentSplit split_idempotent(const Mat& p, double eps = 1e-7);

// Partition the spectrum of a diagonalizable x into clusters and return
// the commuting idempotents projecting onto the clustered eigenspaces,
// built as Lagrange interpolation polynomials in x.  The idempotents
// are validated; a defective x raises Error::Defective.
struct SpectralSplit {
  std::vector<Mat> idempotents;
  std::vector<cplx> eigenvalues;  // one representative per cluster
};
SpectralSplit spectral_idempotents(const Mat& x, double cluster_eps = 1e-7,
                                   double verify_eps = 1e-8);

// Damped Gauss-Newton least squares with seeded random restarts.
// Deterministic: identical inputs and seed give bit-identical output.
struct SolverOptions {
  int max_iterations = 400;  // per restart
  int restarts = 10;         // additional perturbed starts after the first
  double target = 1e-8;      // success iff final |r| <= target
  uint64_t seed = 0;
};
struct SolverResult {
  bool success = false;
  RealVec params;
  double residual = 0.0;
  int iterations = 0;     // cumulative over all starts
  int restarts_used = 0;  // perturbed starts actually taken
};
SolverResult minimize_defect(const std::function<RealVec(const RealVec&)>& residual_fn,
                             const RealVec& init, const SolverOptions& opts);

}  // namespace qsf
