#pragma once

#include "conic/cones.hpp"
#include "conic/estimators.hpp"
#include "conic/existence.hpp"
#include "conic/solvers.hpp"

#include <vector>

namespace conic {

enum class ComputationPath { QuadraticForm, DiagonalClosedForm, Regression };

const char* to_string(ComputationPath path) noexcept;

/// T_C = max { m'l : l in C, l'Sl = 1 } (0 when only l = 0 qualifies).
struct ConicStatResult
{
    double T = 0.0;
    /// Maximizer, normalized to l'Sl = 1; zero in the degenerate case.
    Vector lambda_hat;
    /// Minimizer of the quadratic (or regression) objective over C; parallel
    /// to lambda_hat.
    Vector beta_hat;
    std::vector<Index> support;
    ComputationPath path = ComputationPath::QuadraticForm;
    /// Smallest eigenvalue of S restricted to the support (diagnostic).
    double min_restricted_eigenvalue = 0.0;
    SolveOutcome solve;
};

/// sqrt(m' S^{-1} m). Requires S positive definite unless m = 0.
ConicStatResult wald_statistic(const MeanEstimate& m, const CovEstimate& s);

/// Restricted eigenvalue check for (m, S, C). For k-sparse cones this is
/// the rank screen rank(S) >= k; per-support positive definiteness is
/// verified by the solvers.
ExistenceReport existence_check(const MeanEstimate& m, const CovEstimate& s, const Cone& c);

/// Computes T_C. Diagonal S with a sign cone uses the closed form; all
/// other inputs minimize 1 - 2m'b + b'Sb over C and normalize.
/// Throws ExistenceError when the statistic is unbounded.
ConicStatResult conic_statistic(const MeanEstimate& m, const CovEstimate& s, const Cone& c,
                                const SolverOptions& opts = {});

/// Same statistic from the data matrix via least squares of the constant
/// regressand on X over C, normalized with the sample covariance.
ConicStatResult conic_statistic_regression(const DataMatrix& x, const Cone& c,
                                           const SolverOptions& opts = {});

/// Closed form for the k-sparse cone with diagonal S: keeps the k largest
/// |m_j| / s_j (lower index on ties).
ConicStatResult k_sparse_diag_statistic(const MeanEstimate& m, const CovEstimate& s, Index k);

/// Projection of m onto the maximizing direction, stretched by the
/// ellipsoid: || sqrt(l'l / l'Sl) P_l m ||. Equals T for a valid result.
double geometric_decomposition(const MeanEstimate& m, const CovEstimate& s,
                               const ConicStatResult& result);

struct DecompositionPoints
{
    Vector lambda_hat;
    Vector projection;         ///< P_l m
    Vector scaled_projection;  ///< sqrt(l'l / l'Sl) P_l m
    double length = 0.0;
};

DecompositionPoints decomposition_points(const MeanEstimate& m, const CovEstimate& s,
                                         const ConicStatResult& result);

}  // namespace conic
