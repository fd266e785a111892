#include "conic/conic_stat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace conic {

using namespace cone_kind;

const char* to_string(ComputationPath path) noexcept
{
    switch (path)
    {
    case ComputationPath::QuadraticForm: return "quadratic-form";
    case ComputationPath::DiagonalClosedForm: return "diagonal-closed-form";
    case ComputationPath::Regression: return "regression";
    }
    return "unknown";
}

namespace {

void check_dims(const MeanEstimate& m, const CovEstimate& s, const Cone* c = nullptr)
{
    if (s.matrix.rows() != m.size() || s.matrix.cols() != m.size())
        throw DomainError("mean and covariance dimensions disagree");
    if (c && c->dim() != m.size())
        throw DomainError("cone dimension does not match the mean");
}

ConicStatResult zero_result(Index p, ComputationPath path)
{
    ConicStatResult out;
    out.lambda_hat = Vector::Zero(p);
    out.beta_hat = Vector::Zero(p);
    out.path = path;
    out.solve.beta_hat = Vector::Zero(p);
    return out;
}

double restricted_min_eigenvalue(const Matrix& s, const std::vector<Index>& support)
{
    if (support.empty())
        return 0.0;
    const auto k = static_cast<Index>(support.size());
    Matrix sub(k, k);
    for (Index a = 0; a < k; ++a)
        for (Index b = 0; b < k; ++b)
            sub(a, b) = s(support[a], support[b]);
    return Eigen::SelfAdjointEigenSolver<Matrix>(sub, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

/// Normalizes a minimizer b of the quadratic objective to l = b / sqrt(b'Nb).
ConicStatResult from_beta(const Vector& m, const Matrix& normalizer, SolveOutcome solve,
                          ComputationPath path, bool diagnostics = true)
{
    const Index p = m.size();
    ConicStatResult out = zero_result(p, path);
    const Vector& beta = solve.beta_hat;
    if (!beta.isZero(0.0))
    {
        const double curvature = beta.dot(normalizer * beta);
        if (!(curvature > 0.0))
        {
            ExistenceReport report;
            report.exists = false;
            const double mb = m.dot(beta);
            if (mb > 0.0)
                report.witness = beta / mb;
            throw ExistenceError("optimal direction has zero variance", std::move(report));
        }
        out.lambda_hat = beta / std::sqrt(curvature);
        out.T = std::max(0.0, m.dot(out.lambda_hat));
        out.beta_hat = beta;
        for (Index j = 0; j < p; ++j)
            if (beta(j) != 0.0)
                out.support.push_back(j);
        if (diagnostics)
            out.min_restricted_eigenvalue = restricted_min_eigenvalue(normalizer, out.support);
    }
    out.solve = std::move(solve);
    return out;
}

/// T for a diagonal S and a cone in signed-sparsity normal form: the norm of
/// the projection of z = S^{-1/2} m onto the cone.
ConicStatResult diagonal_closed_form(const MeanEstimate& m, const CovEstimate& s,
                                     const SignedSparsity& form)
{
    const Index p = m.size();
    ConicStatResult out = zero_result(p, ComputationPath::DiagonalClosedForm);
    const Vector sd = s.matrix.diagonal();
    if ((sd.array() <= 0.0).any())
        throw DegenerateInputError("diagonal statistic needs strictly positive variances");
    if (form.trivial)
        return out;
    const Vector scale = sd.cwiseSqrt();
    Vector z = m.m.cwiseQuotient(scale);
    if (form.nonneg)
        z = z.cwiseMax(0.0);
    std::vector<Index> chosen;
    if (form.coordinate)
        chosen.push_back(*form.coordinate);
    else
    {
        chosen.resize(static_cast<std::size_t>(p));
        std::iota(chosen.begin(), chosen.end(), Index{0});
        const auto k = static_cast<std::size_t>(std::min(form.k, p));
        std::partial_sort(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(k),
                          chosen.end(), [&](Index a, Index b) {
                              const double za = std::abs(z(a));
                              const double zb = std::abs(z(b));
                              return za > zb || (za == zb && a < b);
                          });
        chosen.resize(k);
        std::sort(chosen.begin(), chosen.end());
    }
    double t2 = 0.0;
    for (Index j : chosen)
        t2 += z(j) * z(j);
    if (!(t2 > 0.0))
        return out;
    out.T = std::sqrt(t2);
    for (Index j : chosen)
        if (z(j) != 0.0)
        {
            out.lambda_hat(j) = z(j) / (scale(j) * out.T);
            out.support.push_back(j);
        }
    out.beta_hat = out.T * out.lambda_hat;
    out.min_restricted_eigenvalue = sd(out.support.front());
    for (Index j : out.support)
        out.min_restricted_eigenvalue = std::min(out.min_restricted_eigenvalue, sd(j));
    out.solve.beta_hat = out.beta_hat;
    out.solve.objective = 1.0 - t2;
    out.solve.certificate = Certificate::ConvexOptimal;
    return out;
}

Index top_k_nullspace_witness(const Vector& m, const Matrix& s, Index k, Vector& witness)
{
    const Index p = m.size();
    std::vector<Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index b) { return std::abs(m(a)) > std::abs(m(b)); });
    idx.resize(static_cast<std::size_t>(k));
    Matrix sub(k, k);
    Vector rhs(k);
    for (Index a = 0; a < k; ++a)
    {
        rhs(a) = m(idx[a]);
        for (Index b = 0; b < k; ++b)
            sub(a, b) = s(idx[a], idx[b]);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sub);
    const double largest = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    Vector v = Vector::Zero(k);
    for (Index i = 0; i < k; ++i)
        if (eig.eigenvalues()(i) <= 1e-10 * largest)
            v += eig.eigenvectors().col(i).dot(rhs) * eig.eigenvectors().col(i);
    if (!(v.norm() > 1e-10 * rhs.norm()))
        return 0;
    witness = Vector::Zero(p);
    for (Index a = 0; a < k; ++a)
        witness(idx[a]) = v(a);
    witness /= m.dot(witness);
    return 1;
}

}  // namespace

ConicStatResult wald_statistic(const MeanEstimate& m, const CovEstimate& s)
{
    check_dims(m, s);
    const Index p = m.size();
    if (m.m.isZero(0.0))
        return zero_result(p, ComputationPath::QuadraticForm);
    Eigen::LLT<Matrix> llt(s.matrix);
    const double largest = s.matrix.diagonal().cwiseAbs().maxCoeff();
    if (llt.info() != Eigen::Success ||
        !(llt.matrixLLT().diagonal().array().square().minCoeff() > s.rank_tolerance * largest))
    {
        auto report = existence_check(m, s, Cone::full_space(p));
        report.exists = false;
        throw ExistenceError("Wald statistic needs a positive definite covariance estimate",
                             std::move(report));
    }
    SolveOutcome solve;
    solve.beta_hat = llt.solve(m.m);
    solve.objective = quadratic_objective(m.m, s.matrix, solve.beta_hat);
    solve.certificate = Certificate::ConvexOptimal;
    return from_beta(m.m, s.matrix, std::move(solve), ComputationPath::QuadraticForm);
}

ExistenceReport existence_check(const MeanEstimate& m, const CovEstimate& s, const Cone& c)
{
    check_dims(m, s, &c);
    ExistenceReport report;
    if (m.m.isZero(0.0) || c.as<LassoCone>())
        return report;
    SolverOptions opts;
    opts.pd_tolerance = s.rank_tolerance;
    const auto form = signed_sparsity(c);
    if (form && !form->trivial && !form->coordinate && form->k < m.size())
    {
        const Index rank = numerical_rank(s.matrix, s.rank_tolerance);
        report.rank_check = std::make_pair(rank, form->k);
        if (rank < form->k)
        {
            report.exists = false;
            Vector w;
            if (top_k_nullspace_witness(m.m, s.matrix, form->k, w) &&
                (!form->nonneg || (w.array() >= 0.0).all()))
                report.witness = std::move(w);
        }
        return report;
    }
    try
    {
        solve_over_cone(m.m, s.matrix, c, opts);
    }
    catch (const ExistenceError& e)
    {
        return e.report();
    }
    return report;
}

ConicStatResult conic_statistic(const MeanEstimate& m, const CovEstimate& s, const Cone& c,
                                const SolverOptions& opts)
{
    check_dims(m, s, &c);
    if (s.is_diagonal() && is_scone(c))
        if (auto form = signed_sparsity(c))
            return diagonal_closed_form(m, s, *form);
    return from_beta(m.m, s.matrix, solve_over_cone(m.m, s.matrix, c, opts, &s.matrix),
                     ComputationPath::QuadraticForm, opts.diagnostics);
}

ConicStatResult conic_statistic_regression(const DataMatrix& x, const Cone& c,
                                           const SolverOptions& opts)
{
    if (c.dim() != x.cols())
        throw DomainError("cone dimension does not match the data");
    const MeanEstimate m = sample_mean(x);
    const CovEstimate cov = sample_covariance(x);
    return from_beta(m.m, cov.matrix, regression_solve(x, c, opts), ComputationPath::Regression,
                     opts.diagnostics);
}

ConicStatResult k_sparse_diag_statistic(const MeanEstimate& m, const CovEstimate& s, Index k)
{
    check_dims(m, s);
    if (!s.is_diagonal())
        throw DomainError("k-sparse diagonal statistic needs a diagonal covariance estimate");
    if (k < 1 || k > m.size())
        throw DomainError("k-sparse statistic requires 1 <= k <= p");
    return diagonal_closed_form(m, s, SignedSparsity{false, std::nullopt, k, false});
}

DecompositionPoints decomposition_points(const MeanEstimate& m, const CovEstimate& s,
                                         const ConicStatResult& result)
{
    check_dims(m, s);
    const Vector& l = result.lambda_hat;
    if (l.size() != m.size() || l.isZero(0.0))
        throw DegenerateInputError("geometric decomposition needs a nonzero maximizer");
    DecompositionPoints out;
    out.lambda_hat = l;
    const double ll = l.squaredNorm();
    out.projection = l * (l.dot(m.m) / ll);
    const double curvature = l.dot(s.matrix * l);
    if (!(curvature > 0.0))
        throw DegenerateInputError("maximizer has zero variance");
    out.scaled_projection = std::sqrt(ll / curvature) * out.projection;
    out.length = out.scaled_projection.norm();
    return out;
}

double geometric_decomposition(const MeanEstimate& m, const CovEstimate& s,
                               const ConicStatResult& result)
{
    return decomposition_points(m, s, result).length;
}

}  // namespace conic
