#include "conic/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace conic {

namespace {

struct SubSolve
{
    Vector z;
    /// Direction v with S_FF v = 0 and m_F'v > 0, when the restricted
    /// problem is unbounded.
    std::optional<Vector> ray;
};

SubSolve solve_passive(const Matrix& s, const Vector& m, const std::vector<Index>& f,
                       double floor)
{
    const auto k = static_cast<Index>(f.size());
    Matrix sub(k, k);
    Vector rhs(k);
    for (Index a = 0; a < k; ++a)
    {
        rhs(a) = m(f[a]);
        for (Index b = 0; b < k; ++b)
            sub(a, b) = s(f[a], f[b]);
    }
    SubSolve out;
    Eigen::LLT<Matrix> llt(sub);
    if (llt.info() == Eigen::Success &&
        llt.matrixLLT().diagonal().array().square().minCoeff() > floor)
    {
        out.z = llt.solve(rhs);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sub);
    const Vector& ev = eig.eigenvalues();
    const Matrix& u = eig.eigenvectors();
    Vector null_part = Vector::Zero(k);
    out.z = Vector::Zero(k);
    for (Index i = 0; i < k; ++i)
    {
        const double coef = u.col(i).dot(rhs);
        if (ev(i) > floor)
            out.z += (coef / ev(i)) * u.col(i);
        else
            null_part += coef * u.col(i);
    }
    if (null_part.norm() > 1e-10 * std::max(rhs.norm(), 1e-300))
        out.ray = null_part;
    return out;
}

}  // namespace

SolveOutcome nonneg_qp(const Vector& m, const Matrix& s, const SolverOptions& opts)
{
    const Index p = m.size();
    if (s.rows() != p || s.cols() != p)
        throw DomainError("covariance dimension does not match mean");
    const double scale = p ? s.diagonal().cwiseAbs().maxCoeff() : 0.0;
    const double floor = opts.pd_tolerance * std::max(scale, std::numeric_limits<double>::min());
    const double kkt_eps = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());

    Vector beta = Vector::Zero(p);
    std::vector<char> passive(static_cast<std::size_t>(p), 0);
    std::vector<char> blocked(static_cast<std::size_t>(p), 0);
    std::size_t iterations = 0;
    const auto limit = static_cast<std::size_t>(opts.max_iterations);

    auto passive_set = [&] {
        std::vector<Index> f;
        for (Index j = 0; j < p; ++j)
            if (passive[j])
                f.push_back(j);
        return f;
    };

    while (true)
    {
        if (++iterations > limit)
            throw ConvergenceError("nonnegative QP did not converge");
        const Vector w = m - s * beta;
        Index enter = -1;
        double best = kkt_eps;
        for (Index j = 0; j < p; ++j)
            if (!passive[j] && !blocked[j] && w(j) > best)
            {
                best = w(j);
                enter = j;
            }
        if (enter < 0)
            break;
        passive[enter] = 1;
        bool first = true;
        while (true)
        {
            if (++iterations > limit)
                throw ConvergenceError("nonnegative QP did not converge");
            const auto f = passive_set();
            SubSolve sub = solve_passive(s, m, f, floor);
            const auto k = static_cast<Index>(f.size());
            if (sub.ray)
            {
                const Vector& v = *sub.ray;
                double step = std::numeric_limits<double>::infinity();
                for (Index a = 0; a < k; ++a)
                    if (v(a) < 0.0)
                        step = std::min(step, beta(f[a]) / -v(a));
                if (!std::isfinite(step))
                {
                    Vector witness = Vector::Zero(p);
                    for (Index a = 0; a < k; ++a)
                        witness(f[a]) = v(a);
                    witness /= m.dot(witness);
                    ExistenceReport report;
                    report.exists = false;
                    report.witness = std::move(witness);
                    throw ExistenceError("objective is unbounded over the nonnegative orthant",
                                         report);
                }
                if (step == 0.0 && first)
                {
                    passive[enter] = 0;
                    blocked[enter] = 1;
                    break;
                }
                for (Index a = 0; a < k; ++a)
                    beta(f[a]) += step * v(a);
            }
            else
            {
                bool feasible = true;
                for (Index a = 0; a < k; ++a)
                    feasible = feasible && sub.z(a) > 0.0;
                if (feasible)
                {
                    for (Index a = 0; a < k; ++a)
                        beta(f[a]) = sub.z(a);
                    std::fill(blocked.begin(), blocked.end(), 0);
                    break;
                }
                if (first)
                {
                    // The entering index must move off zero; if it cannot,
                    // block it until beta changes.
                    const Index pos = std::find(f.begin(), f.end(), enter) - f.begin();
                    if (!(sub.z(pos) > 0.0))
                    {
                        passive[enter] = 0;
                        blocked[enter] = 1;
                        break;
                    }
                }
                double alpha = 1.0;
                for (Index a = 0; a < k; ++a)
                    if (sub.z(a) <= 0.0)
                    {
                        const double b = beta(f[a]);
                        alpha = std::min(alpha, b / (b - sub.z(a)));
                    }
                for (Index a = 0; a < k; ++a)
                    beta(f[a]) += alpha * (sub.z(a) - beta(f[a]));
            }
            first = false;
            for (Index a = 0; a < k; ++a)
                if (beta(f[a]) <= 1e-15 * std::max(1.0, beta.cwiseAbs().maxCoeff()))
                {
                    beta(f[a]) = 0.0;
                    passive[f[a]] = 0;
                }
            std::fill(blocked.begin(), blocked.end(), 0);
        }
    }

    SolveOutcome out;
    out.beta_hat = std::move(beta);
    out.objective = quadratic_objective(m, s, out.beta_hat);
    out.certificate = Certificate::ConvexOptimal;
    out.iterations = iterations;
    return out;
}

}  // namespace conic
