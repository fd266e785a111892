#pragma once

#include "conic/cones.hpp"
#include "conic/estimators.hpp"
#include "conic/existence.hpp"

#include <cstdint>
#include <vector>

namespace conic {

enum class SwapNeighborhood { SingleSwap };

struct SolverOptions
{
    /// Largest number of supports the exhaustive best-subset solver may visit.
    std::uint64_t exhaustive_limit = 1'000'000;
    int max_iterations = 10'000;
    double convergence_tol = 1e-10;
    SwapNeighborhood swap_neighborhood = SwapNeighborhood::SingleSwap;
    std::uint64_t seed = 0;
    /// Random-start local searches run after forward stepwise.
    int restarts = 5;
    /// A support J is usable when every Cholesky pivot of S_JJ exceeds
    /// pd_tolerance * max_j S_jj.
    double pd_tolerance = 1e-10;
    /// Worker threads for exhaustive enumeration and restarts.
    unsigned workers = 1;
    /// Compute the restricted eigenvalue diagnostic on the returned support.
    bool diagnostics = true;
};

enum class Certificate {
    ExactExhaustive,
    HeuristicLocalOpt,
    FixedPoint,
    /// Closed form or convex problem solved to optimality.
    ConvexOptimal,
};

const char* to_string(Certificate c) noexcept;

/// Minimizer of 1 - 2 m'b + b'Qb over a cone (or, for regression problems,
/// of ||1 - Xb||^2 / n, which has the same form with Q the Gram matrix).
struct SolveOutcome
{
    Vector beta_hat;
    double objective = 1.0;
    Certificate certificate = Certificate::ConvexOptimal;
    std::size_t iterations = 0;
    /// Supports rejected because S_JJ was not positive definite.
    std::size_t skipped_supports = 0;
    /// Number of supports (exhaustive solvers) attaining the optimum.
    std::size_t tied_supports = 1;
    /// Smallest squared Cholesky pivot of S_JJ on the returned support.
    double min_pivot = 0.0;
};

/// 1 - 2 m'b + b'Qb.
double quadratic_objective(const Vector& m, const Matrix& q, const Vector& beta);

/// Exact minimization over {||b||_0 <= k} by enumerating every support of
/// size at most k. Throws BudgetExceededError when that count exceeds
/// opts.exhaustive_limit, ExistenceError when every nonempty support is
/// singular.
SolveOutcome bss_exhaustive(const Vector& m, const Matrix& s, Index k,
                            const SolverOptions& opts = {});

/// Forward stepwise selection to size k followed by best-improvement single
/// swaps, repeated from opts.restarts random supports.
SolveOutcome bss_heuristic(const Vector& m, const Matrix& s, Index k,
                           const SolverOptions& opts = {});

/// Exhaustive minimization over {||b||_0 <= k, b >= 0}.
SolveOutcome bss_nonneg_exhaustive(const Vector& m, const Matrix& s, Index k,
                                   const SolverOptions& opts = {});

/// Forward stepwise plus swaps over {||b||_0 <= k, b >= 0}; each support is
/// scored with nonneg_qp.
SolveOutcome bss_nonneg_heuristic(const Vector& m, const Matrix& s, Index k,
                                  const SolverOptions& opts = {});

/// Active-set minimization over {b >= 0}. Throws ExistenceError with a
/// witness when the objective is unbounded below.
SolveOutcome nonneg_qp(const Vector& m, const Matrix& s, const SolverOptions& opts = {});

/// Minimization over the l1 ball {||b||_1 <= radius}, solved as a penalized
/// problem by coordinate descent with bisection on the penalty.
SolveOutcome lasso_constrained(const Vector& m, const Matrix& s, double radius,
                               const SolverOptions& opts = {});

/// Minimization over the lasso cone: b with ||b||_1 <= t sqrt(b'Nb), where N
/// is the ellipsoid matrix. With q == N this is the quadratic-form problem;
/// the regression form uses the Gram matrix for q and the sample covariance
/// for N.
SolveOutcome lasso_cone_solve(const Vector& m, const Matrix& q, const Matrix& ellipsoid,
                              double t, const SolverOptions& opts = {});

inline SolveOutcome lasso_cone_solve(const Vector& m, const Matrix& s, double t,
                                     const SolverOptions& opts = {})
{
    return lasso_cone_solve(m, s, s, t, opts);
}

/// Dispatch to the solver appropriate for the cone. `ellipsoid` is the
/// matrix defining the lasso cone (defaults to q).
SolveOutcome solve_over_cone(const Vector& m, const Matrix& q, const Cone& c,
                             const SolverOptions& opts = {},
                             const Matrix* ellipsoid = nullptr);

/// min (1/n)||1 - Xb||^2 over b in C, via the expansion
/// 1 - 2m'b + b'Gb with G = X'X/n.
SolveOutcome regression_solve(const DataMatrix& x, const Cone& c,
                              const SolverOptions& opts = {});

/// Number of supports of size 1..k out of p, saturating at UINT64_MAX.
std::uint64_t support_count(Index p, Index k);

}  // namespace conic
