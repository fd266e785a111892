#include "conic/solvers.hpp"

#include <cmath>
#include <limits>

namespace conic {

using namespace cone_kind;

namespace {

double pivot_floor(const Matrix& q, double rel)
{
    const double scale = q.rows() ? q.diagonal().cwiseAbs().maxCoeff() : 0.0;
    return rel * std::max(scale, std::numeric_limits<double>::min());
}

SolveOutcome zero_outcome(Index p)
{
    SolveOutcome out;
    out.beta_hat = Vector::Zero(p);
    out.objective = 1.0;
    out.certificate = Certificate::ConvexOptimal;
    return out;
}

[[noreturn]] void unbounded(const std::string& what, Vector witness)
{
    ExistenceReport report;
    report.exists = false;
    report.witness = std::move(witness);
    throw ExistenceError(what, std::move(report));
}

SolveOutcome full_space(const Vector& m, const Matrix& q, const SolverOptions& opts)
{
    const Index p = m.size();
    const double floor = pivot_floor(q, opts.pd_tolerance);
    SolveOutcome out = zero_outcome(p);
    if (m.isZero(0.0))
        return out;
    Eigen::LLT<Matrix> llt(q);
    if (llt.info() == Eigen::Success)
    {
        const double min_pivot = llt.matrixLLT().diagonal().array().square().minCoeff();
        if (min_pivot > floor)
        {
            out.beta_hat = llt.solve(m);
            out.objective = quadratic_objective(m, q, out.beta_hat);
            out.min_pivot = min_pivot;
            return out;
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
    const Vector& ev = eig.eigenvalues();
    const Matrix& u = eig.eigenvectors();
    const double largest = std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    Vector null_part = Vector::Zero(p);
    Vector beta = Vector::Zero(p);
    for (Index i = 0; i < p; ++i)
    {
        const double coef = u.col(i).dot(m);
        if (ev(i) > opts.pd_tolerance * largest)
            beta += (coef / ev(i)) * u.col(i);
        else
            null_part += coef * u.col(i);
    }
    if (null_part.norm() > 1e-8 * m.norm())
        unbounded("covariance is singular in a direction correlated with the mean",
                  null_part / null_part.squaredNorm());
    out.beta_hat = std::move(beta);
    out.objective = quadratic_objective(m, q, out.beta_hat);
    return out;
}

SolveOutcome single_coordinate(const Vector& m, const Matrix& q, Index j, bool nonneg,
                               const SolverOptions& opts)
{
    SolveOutcome out = zero_outcome(m.size());
    const double mj = m(j);
    if (mj == 0.0 || (nonneg && mj < 0.0))
        return out;
    if (!(q(j, j) > pivot_floor(q, opts.pd_tolerance)))
    {
        Vector w = Vector::Zero(m.size());
        w(j) = 1.0 / mj;
        unbounded("zero variance on a coordinate with nonzero mean", std::move(w));
    }
    out.beta_hat(j) = mj / q(j, j);
    out.objective = quadratic_objective(m, q, out.beta_hat);
    out.min_pivot = q(j, j);
    return out;
}

SolveOutcome directions(const Vector& m, const Matrix& q, const std::vector<Vector>& dirs,
                        const SolverOptions& opts)
{
    SolveOutcome out = zero_outcome(m.size());
    const double floor = pivot_floor(q, opts.pd_tolerance);
    double best = 0.0;
    for (const auto& d : dirs)
    {
        const double a = m.dot(d);
        if (!(a > 0.0))
            continue;
        const double curv = d.dot(q * d);
        if (!(curv > floor * d.squaredNorm()))
            unbounded("zero variance along a direction with positive mean", d / a);
        const double gain = a * a / curv;
        if (gain > best)
        {
            best = gain;
            out.beta_hat = (a / curv) * d;
        }
    }
    out.objective = quadratic_objective(m, q, out.beta_hat);
    return out;
}

bool has_lasso(const Cone& c)
{
    if (c.as<LassoCone>())
        return true;
    if (auto inter = c.as<Intersection>())
        for (const auto& part : inter->parts)
            if (has_lasso(part))
                return true;
    return false;
}

}  // namespace

SolveOutcome solve_over_cone(const Vector& m, const Matrix& q, const Cone& c,
                             const SolverOptions& opts, const Matrix* ellipsoid)
{
    const Index p = m.size();
    if (c.dim() != p || q.rows() != p || q.cols() != p)
        throw DomainError("cone, mean and covariance dimensions disagree");

    if (auto lasso = c.as<LassoCone>())
        return lasso_cone_solve(m, q, ellipsoid ? *ellipsoid : q, lasso->t, opts);
    if (has_lasso(c))
        throw UnsupportedOperationError("intersections with the lasso cone are not supported");
    if (auto fd = c.as<FiniteDirections>())
        return directions(m, q, fd->directions, opts);
    if (auto inter = c.as<Intersection>())
        for (const auto& part : inter->parts)
            if (auto fd = part.as<FiniteDirections>())
            {
                std::vector<Vector> kept;
                for (const auto& d : fd->directions)
                    if (contains(c, d))
                        kept.push_back(d);
                return directions(m, q, kept, opts);
            }

    const auto form = signed_sparsity(c);
    if (!form)
        throw UnsupportedOperationError("no solver for cone " + c.describe());
    if (form->trivial)
        return zero_outcome(p);
    if (form->coordinate)
        return single_coordinate(m, q, *form->coordinate, form->nonneg, opts);
    if (form->k >= p)
        return form->nonneg ? nonneg_qp(m, q, opts) : full_space(m, q, opts);
    const bool exhaustive = support_count(p, form->k) <= opts.exhaustive_limit;
    if (form->nonneg)
        return exhaustive ? bss_nonneg_exhaustive(m, q, form->k, opts)
                          : bss_nonneg_heuristic(m, q, form->k, opts);
    return exhaustive ? bss_exhaustive(m, q, form->k, opts) : bss_heuristic(m, q, form->k, opts);
}

SolveOutcome regression_solve(const DataMatrix& x, const Cone& c, const SolverOptions& opts)
{
    const MeanEstimate mean = sample_mean(x);
    const GramMatrix gram = gram_matrix(x);
    const CovEstimate cov = sample_covariance(x);
    return solve_over_cone(mean.m, gram.matrix, c, opts, &cov.matrix);
}

}  // namespace conic
