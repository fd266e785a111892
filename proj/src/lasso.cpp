#include "conic/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conic {

namespace {

double soft_threshold(double x, double level)
{
    if (x > level)
        return x - level;
    if (x < -level)
        return x + level;
    return 0.0;
}

/// Coordinate descent for min 1 - 2m'b + b'Sb + 2 eta ||b||_1 over the
/// coordinates in `active`; `beta` is the warm start and the result.
void penalized_cd(const Vector& m, const Matrix& s, const std::vector<Index>& active, double eta,
                  Vector& beta, const SolverOptions& opts)
{
    Vector grad = m - s * beta;  // half negative gradient of the smooth part
    for (int sweep = 0; sweep < opts.max_iterations; ++sweep)
    {
        double max_change = 0.0;
        double max_beta = 0.0;
        for (Index j : active)
        {
            const double sjj = s(j, j);
            const double old = beta(j);
            const double updated = soft_threshold(grad(j) + sjj * old, eta) / sjj;
            const double delta = updated - old;
            if (delta != 0.0)
            {
                beta(j) = updated;
                grad.noalias() -= delta * s.col(j);
                max_change = std::max(max_change, std::abs(delta) * std::sqrt(sjj));
            }
            max_beta = std::max(max_beta, std::abs(updated) * std::sqrt(sjj));
        }
        if (max_change <= 1e-15 * std::max(1.0, max_beta))
            return;
    }
    throw ConvergenceError("lasso coordinate descent did not converge");
}

/// Largest KKT violation of the constrained problem at beta with multiplier
/// nu (gradient 2(Sb - m) + nu * subgradient of ||b||_1 must vanish).
double kkt_residual(const Vector& m, const Matrix& s, const Vector& beta, double nu,
                    double radius)
{
    const Vector g = 2.0 * (s * beta - m);
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j)
    {
        if (beta(j) != 0.0)
            worst = std::max(worst, std::abs(g(j) + nu * (beta(j) > 0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::abs(g(j)) - nu);
    }
    if (nu > 0.0)
        worst = std::max(worst, std::abs(beta.lpNorm<1>() - radius) * nu / std::max(1.0, radius));
    return worst;
}

}  // namespace

SolveOutcome lasso_constrained(const Vector& m, const Matrix& s, double radius,
                               const SolverOptions& opts)
{
    const Index p = m.size();
    if (s.rows() != p || s.cols() != p)
        throw DomainError("covariance dimension does not match mean");
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw DomainError("lasso radius must be finite and positive");

    SolveOutcome out;
    out.certificate = Certificate::ConvexOptimal;
    out.beta_hat = Vector::Zero(p);
    out.objective = 1.0;
    if (m.isZero(0.0))
        return out;

    const double scale = s.diagonal().cwiseAbs().maxCoeff();
    const double floor = opts.pd_tolerance * std::max(scale, std::numeric_limits<double>::min());

    // Zero-variance coordinates have zero columns (S is PSD); the objective
    // is linear in them.
    std::vector<Index> active;
    Index zero_pick = -1;
    double eta_lo = 0.0;
    double eta_hi = 0.0;
    for (Index j = 0; j < p; ++j)
    {
        if (s(j, j) > floor)
        {
            active.push_back(j);
            eta_hi = std::max(eta_hi, std::abs(m(j)));
        }
        else if (std::abs(m(j)) > eta_lo)
        {
            eta_lo = std::abs(m(j));
            zero_pick = j;
        }
    }

    auto finalize = [&](Vector beta, double nu) {
        out.beta_hat = std::move(beta);
        out.objective = quadratic_objective(m, s, out.beta_hat);
        const double kkt = kkt_residual(m, s, out.beta_hat, nu, radius);
        if (kkt > 1e-8 * std::max(1.0, m.cwiseAbs().maxCoeff()))
            throw ConvergenceError("lasso KKT residual " + std::to_string(kkt) +
                                   " above tolerance");
        return out;
    };

    if (eta_hi <= eta_lo)
    {
        Vector beta = Vector::Zero(p);
        beta(zero_pick) = m(zero_pick) > 0 ? radius : -radius;
        return finalize(std::move(beta), 2.0 * eta_lo);
    }

    if (zero_pick < 0)
    {
        Eigen::LLT<Matrix> llt(s);
        if (llt.info() == Eigen::Success &&
            llt.matrixLLT().diagonal().array().square().minCoeff() > floor)
        {
            Vector unconstrained = llt.solve(m);
            if (unconstrained.lpNorm<1>() <= radius)
                return finalize(std::move(unconstrained), 0.0);
        }
    }

    double lo = eta_lo;
    double hi = eta_hi;
    Vector beta_hi = Vector::Zero(p);
    Vector beta_lo;
    double norm_lo = std::numeric_limits<double>::infinity();
    double norm_hi = 0.0;
    Vector work = Vector::Zero(p);
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it)
    {
        ++out.iterations;
        const double mid = 0.5 * (lo + hi);
        work = beta_hi;
        penalized_cd(m, s, active, mid, work, opts);
        const double norm = work.lpNorm<1>();
        if (norm > radius)
        {
            lo = mid;
            beta_lo = work;
            norm_lo = norm;
        }
        else
        {
            hi = mid;
            beta_hi = work;
            norm_hi = norm;
            if (radius - norm <= 1e-14 * radius)
                break;
        }
    }

    Vector beta = beta_hi;
    double eta = hi;
    if (beta_lo.size() == p && std::isfinite(norm_lo) && norm_lo > norm_hi)
    {
        // The path is piecewise linear in eta; interpolate onto the sphere.
        const double w = (norm_lo - radius) / (norm_lo - norm_hi);
        beta = beta_lo + w * (beta_hi - beta_lo);
        eta = lo + w * (hi - lo);
    }
    else if (zero_pick >= 0 && beta.lpNorm<1>() < radius)
    {
        // Remaining budget goes to the zero-variance coordinate with the
        // largest |m_j|, whose marginal value equals the multiplier.
        beta(zero_pick) = (m(zero_pick) > 0 ? 1.0 : -1.0) * (radius - beta.lpNorm<1>());
        eta = eta_lo;
    }
    const bool binding = beta.lpNorm<1>() >= radius * (1.0 - 1e-12);
    return finalize(std::move(beta), binding ? 2.0 * eta : 0.0);
}

SolveOutcome lasso_cone_solve(const Vector& m, const Matrix& q, const Matrix& ellipsoid, double t,
                              const SolverOptions& opts)
{
    const Index p = m.size();
    if (q.rows() != p || q.cols() != p || ellipsoid.rows() != p || ellipsoid.cols() != p)
        throw DomainError("matrix dimension does not match mean");
    if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError("lasso cone requires a finite t > 0");

    SolveOutcome best;
    best.certificate = Certificate::FixedPoint;
    best.beta_hat = Vector::Zero(p);
    best.objective = 1.0;
    if (m.isZero(0.0))
        return best;

    double best_t = 0.0;
    std::size_t evaluations = 0;

    // Solve at radius r, record the cone point if it satisfies the lasso
    // cone constraint, and return the radius implied by the solution.
    auto evaluate = [&](const Vector& beta) -> double {
        if (beta.isZero(0.0))
            return 0.0;
        const double norm2 = beta.dot(ellipsoid * beta);
        if (!(norm2 > 0.0))
            return 0.0;
        const double scale = std::sqrt(norm2);
        const double l1 = beta.lpNorm<1>() / scale;
        if (l1 <= t * (1.0 + 1e-12))
        {
            const double value = m.dot(beta) / scale;
            if (value > best_t)
            {
                best_t = value;
                best.beta_hat = beta;
            }
        }
        return t * scale;
    };
    auto at_radius = [&](double r) -> double {
        ++evaluations;
        return evaluate(lasso_constrained(m, q, r, opts).beta_hat);
    };

    const double curvature = m.dot(ellipsoid * m) / m.squaredNorm();
    const double r0 = curvature > 0.0 ? t / std::sqrt(curvature) : 1.0;
    double r_top = r0 * 1e4;
    {
        Eigen::LLT<Matrix> llt(q);
        if (llt.info() == Eigen::Success)
        {
            const Vector unconstrained = llt.solve(m);
            if (unconstrained.allFinite())
            {
                evaluate(unconstrained);
                r_top = std::max(r_top, 2.0 * unconstrained.lpNorm<1>());
            }
        }
    }

    std::vector<double> starts{r0};
    constexpr int kGrid = 50;
    const double r_bottom = r0 * 1e-4;
    for (int i = 0; i < kGrid; ++i)
        starts.push_back(r_bottom * std::pow(r_top / r_bottom, i / double(kGrid - 1)));

    for (double r : starts)
    {
        for (int it = 0; it < 50 && r > 0.0 && std::isfinite(r); ++it)
        {
            const double next = at_radius(r);
            if (std::abs(next - r) <= 1e-8 * (1.0 + r))
                break;
            r = next;
        }
    }

    // Report the minimizer along the best ray rather than the raw lasso
    // solution that located it.
    if (!best.beta_hat.isZero(0.0))
    {
        const Vector& ray = best.beta_hat;
        const double curv = ray.dot(q * ray);
        if (curv > 0.0)
            best.beta_hat = (m.dot(ray) / curv) * ray;
    }
    best.objective = quadratic_objective(m, q, best.beta_hat);
    best.iterations = evaluations;
    return best;
}

}  // namespace conic
