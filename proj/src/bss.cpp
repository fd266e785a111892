#include "conic/solvers.hpp"

#include "conic/parallel.hpp"
#include "conic/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace conic {

const char* to_string(Certificate c) noexcept
{
    switch (c)
    {
    case Certificate::ExactExhaustive: return "exact-exhaustive";
    case Certificate::HeuristicLocalOpt: return "heuristic-local-opt";
    case Certificate::FixedPoint: return "fixed-point";
    case Certificate::ConvexOptimal: return "convex-optimal";
    }
    return "unknown";
}

double quadratic_objective(const Vector& m, const Matrix& q, const Vector& beta)
{
    return 1.0 - 2.0 * m.dot(beta) + beta.dot(q * beta);
}

std::uint64_t support_count(Index p, Index k)
{
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t total = 0;
    std::uint64_t binom = 1;  // C(p, i)
    for (Index i = 1; i <= k && i <= p; ++i)
    {
        // binom * (p - i + 1) / i, guarding overflow.
        const auto num = static_cast<std::uint64_t>(p - i + 1);
        if (binom > kMax / num)
            return kMax;
        binom = binom * num / static_cast<std::uint64_t>(i);
        if (total > kMax - binom)
            return kMax;
        total += binom;
    }
    return total;
}

namespace {

double pivot_floor(const Matrix& s, double rel)
{
    const double scale = s.rows() ? s.diagonal().cwiseAbs().maxCoeff() : 0.0;
    return rel * std::max(scale, std::numeric_limits<double>::min());
}

/// beta on support J: S_JJ^{-1} m_J. Returns false if S_JJ is not PD at the
/// pivot floor.
bool solve_on_support(const Vector& m, const Matrix& s, const std::vector<Index>& support,
                      double floor, Vector& beta, double& min_pivot)
{
    beta = Vector::Zero(m.size());
    min_pivot = 0.0;
    if (support.empty())
        return true;
    const auto k = static_cast<Index>(support.size());
    Matrix sub(k, k);
    Vector rhs(k);
    for (Index a = 0; a < k; ++a)
    {
        rhs(a) = m(support[a]);
        for (Index b = 0; b < k; ++b)
            sub(a, b) = s(support[a], support[b]);
    }
    Eigen::LLT<Matrix> llt(sub);
    if (llt.info() != Eigen::Success)
        return false;
    min_pivot = llt.matrixLLT().diagonal().array().square().minCoeff();
    if (!(min_pivot > floor))
        return false;
    const Vector sol = llt.solve(rhs);
    for (Index a = 0; a < k; ++a)
        beta(support[a]) = sol(a);
    return true;
}

[[noreturn]] void throw_all_singular(const Vector& m, const Matrix& s)
{
    ExistenceReport report;
    report.exists = false;
    for (Index j = 0; j < m.size(); ++j)
        if (m(j) != 0.0)
        {
            Vector w = Vector::Zero(m.size());
            w(j) = 1.0 / m(j);
            if (w.dot(s * w) <= 1e-8)
                report.witness = std::move(w);
            break;
        }
    throw ExistenceError("every candidate support has a singular covariance block", report);
}

/// Depth-first enumeration of supports in lexicographic order, extending a
/// Cholesky factor one index per level.
class SupportEnumerator
{
public:
    SupportEnumerator(const Vector& m, const Matrix& s, Index k, double floor, bool nonneg)
        : m_(m), s_(s), p_(m.size()), k_(k), floor_(floor), nonneg_(nonneg),
          l_(Matrix::Zero(k, k)), y_(k), support_(static_cast<std::size_t>(k))
    {
    }

    struct Result
    {
        double gain = 0.0;  // m_J' S_JJ^{-1} m_J, objective is 1 - gain
        std::vector<Index> support;
        bool found = false;
        std::uint64_t visited = 0;
        std::uint64_t skipped = 0;
        std::uint64_t ties = 0;
    };

    /// All supports whose smallest index is `first`.
    Result run(Index first)
    {
        result_ = Result{};
        extend(0, first, 0.0);
        return result_;
    }

private:
    void extend(Index depth, Index j, double gain)
    {
        ++result_.visited;
        // New Cholesky row: l = L^{-1} S_{J,j}.
        double d = s_(j, j);
        double cross = 0.0;
        for (Index r = 0; r < depth; ++r)
        {
            double v = s_(support_[r], j);
            for (Index q = 0; q < r; ++q)
                v -= l_(r, q) * l_(depth, q);
            v /= l_(r, r);
            l_(depth, r) = v;
            d -= v * v;
            cross += v * y_(r);
        }
        if (!(d > floor_))
        {
            result_.skipped += subtree_size(depth + 1, j);
            return;
        }
        const double pivot = std::sqrt(d);
        l_(depth, depth) = pivot;
        y_(depth) = (m_(j) - cross) / pivot;
        support_[depth] = j;
        const double new_gain = gain + y_(depth) * y_(depth);
        const Index size = depth + 1;
        if (!nonneg_ || positive_solution(size))
            consider(new_gain, size);
        if (size < k_)
            for (Index next = j + 1; next < p_; ++next)
                extend(size, next, new_gain);
    }

    bool positive_solution(Index size) const
    {
        // beta = L^{-T} y
        Vector beta = y_.head(size);
        for (Index r = size - 1; r >= 0; --r)
        {
            for (Index q = r + 1; q < size; ++q)
                beta(r) -= l_(q, r) * beta(q);
            beta(r) /= l_(r, r);
            if (!(beta(r) > 0.0))
                return false;
        }
        return true;
    }

    void consider(double gain, Index size)
    {
        const double tie_tol = 1e-12 * std::max(1.0, std::abs(1.0 - gain));
        if (!result_.found || gain > result_.gain)
        {
            const bool near = result_.found && gain - result_.gain <= tie_tol;
            result_.ties = near ? result_.ties + 1 : 1;
            result_.gain = gain;
            result_.support.assign(support_.begin(), support_.begin() + size);
            result_.found = true;
        }
        else if (result_.gain - gain <= tie_tol)
            ++result_.ties;
    }

    /// Supports in the DFS subtree rooted at a support of `size` ending at `last`.
    std::uint64_t subtree_size(Index size, Index last) const
    {
        const Index rest = p_ - 1 - last;
        return 1 + (size < k_ ? support_count(rest, k_ - size) : 0);
    }

    const Vector& m_;
    const Matrix& s_;
    Index p_;
    Index k_;
    double floor_;
    bool nonneg_;
    Matrix l_;
    Vector y_;
    std::vector<Index> support_;
    Result result_;
};

SolveOutcome exhaustive(const Vector& m, const Matrix& s, Index k, const SolverOptions& opts,
                        bool nonneg)
{
    const Index p = m.size();
    if (s.rows() != p || s.cols() != p)
        throw DomainError("covariance dimension does not match mean");
    if (k < 1 || k > p)
        throw DomainError("best subset selection requires 1 <= k <= p");
    const std::uint64_t count = support_count(p, k);
    if (count > opts.exhaustive_limit)
        throw BudgetExceededError("exhaustive search would visit " + std::to_string(count) +
                                  " supports (limit " + std::to_string(opts.exhaustive_limit) +
                                  "); use the heuristic solver");
    const double floor = pivot_floor(s, opts.pd_tolerance);

    std::vector<SupportEnumerator::Result> parts(static_cast<std::size_t>(p));
    parallel_for(parts.size(), opts.workers, [&](std::size_t f) {
        SupportEnumerator e(m, s, k, floor, nonneg);
        parts[f] = e.run(static_cast<Index>(f));
    });

    // Empty support: gain 0. Earlier tasks hold lexicographically smaller supports.
    double best_gain = 0.0;
    std::vector<Index> best;
    std::uint64_t skipped = 0;
    std::uint64_t visited = 0;
    for (const auto& r : parts)
    {
        skipped += r.skipped;
        visited += r.visited;
        if (r.found && r.gain > best_gain)
        {
            best_gain = r.gain;
            best = r.support;
        }
    }
    std::uint64_t ties = 0;
    const double tie_tol = 1e-12 * std::max(1.0, std::abs(1.0 - best_gain));
    for (const auto& r : parts)
        if (r.found && best_gain - r.gain <= tie_tol)
            ties += r.ties;
    if (best.empty() && !(best_gain > tie_tol))
        ++ties;  // the empty support itself attains the optimum
    if (skipped == count && !m.isZero(0.0))
        throw_all_singular(m, s);

    SolveOutcome out;
    double min_pivot = 0.0;
    solve_on_support(m, s, best, 0.0, out.beta_hat, min_pivot);
    out.objective = quadratic_objective(m, s, out.beta_hat);
    out.certificate = Certificate::ExactExhaustive;
    out.iterations = visited;
    out.skipped_supports = skipped;
    out.tied_supports = std::max<std::uint64_t>(ties, 1);
    out.min_pivot = min_pivot;
    return out;
}

/// Forward stepwise selection with an incrementally extended Cholesky
/// factor. Rows of z hold L^{-1} S_{J,j} for every column j.
std::vector<Index> forward_stepwise(const Vector& m, const Matrix& s, Index k, double floor,
                                    std::size_t& skipped)
{
    const Index p = m.size();
    Matrix z(k, p);
    Vector d = s.diagonal();
    Vector e = m;
    std::vector<char> in(static_cast<std::size_t>(p), 0);
    std::vector<Index> support;
    for (Index step = 0; step < k; ++step)
    {
        Index pick = -1;
        double best = 0.0;
        for (Index j = 0; j < p; ++j)
        {
            if (in[j])
                continue;
            if (!(d(j) > floor))
            {
                if (step == 0)
                    ++skipped;
                continue;
            }
            const double gain = e(j) * e(j) / d(j);
            if (gain > best)
            {
                best = gain;
                pick = j;
            }
        }
        if (pick < 0)
            break;
        const double pivot = std::sqrt(d(pick));
        const double y = e(pick) / pivot;
        for (Index j = 0; j < p; ++j)
        {
            double v = s(pick, j);
            for (Index r = 0; r < step; ++r)
                v -= z(r, pick) * z(r, j);
            v /= pivot;
            z(step, j) = v;
        }
        for (Index j = 0; j < p; ++j)
        {
            d(j) -= z(step, j) * z(step, j);
            e(j) -= z(step, j) * y;
        }
        in[pick] = 1;
        support.push_back(pick);
    }
    return support;
}

/// Gain m_J' S_JJ^{-1} m_J, or -inf when S_JJ is not PD at the floor.
double support_gain(const Vector& m, const Matrix& s, const std::vector<Index>& support,
                    double floor, Matrix* inverse = nullptr, Vector* beta = nullptr)
{
    const auto k = static_cast<Index>(support.size());
    if (k == 0)
    {
        if (inverse)
            inverse->resize(0, 0);
        if (beta)
            beta->resize(0);
        return 0.0;
    }
    Matrix sub(k, k);
    Vector rhs(k);
    for (Index a = 0; a < k; ++a)
    {
        rhs(a) = m(support[a]);
        for (Index b = 0; b < k; ++b)
            sub(a, b) = s(support[a], support[b]);
    }
    Eigen::LLT<Matrix> llt(sub);
    if (llt.info() != Eigen::Success ||
        !(llt.matrixLLT().diagonal().array().square().minCoeff() > floor))
        return -std::numeric_limits<double>::infinity();
    Vector b = llt.solve(rhs);
    const double gain = rhs.dot(b);
    if (inverse)
        *inverse = llt.solve(Matrix::Identity(k, k));
    if (beta)
        *beta = std::move(b);
    return gain;
}

/// Best-improvement single swaps (plus additions while |J| < k) until no
/// move improves the gain.
double swap_search(const Vector& m, const Matrix& s, Index k, double floor, int max_iterations,
                   std::vector<Index>& support, std::size_t& iterations)
{
    const Index p = m.size();
    std::vector<char> in(static_cast<std::size_t>(p), 0);
    for (Index j : support)
        in[j] = 1;
    Matrix h;
    Vector beta;
    double gain = support_gain(m, s, support, floor, &h, &beta);
    if (!std::isfinite(gain))
        return gain;
    Vector c, u;
    for (int it = 0; it < max_iterations; ++it)
    {
        ++iterations;
        const auto size = static_cast<Index>(support.size());
        double best = gain;
        Index best_in = -1;  // position in support to drop, -1 for a pure addition
        Index best_out = -1;
        c.resize(size);
        for (Index j = 0; j < p; ++j)
        {
            if (in[j])
                continue;
            for (Index a = 0; a < size; ++a)
                c(a) = s(support[a], j);
            u = h * c;
            const double cu = c.dot(u);
            const double cb = c.dot(beta);
            if (size < k)
            {
                const double d = s(j, j) - cu;
                if (d > floor)
                {
                    const double r = m(j) - cb;
                    const double g = gain + r * r / d;
                    if (g > best)
                    {
                        best = g;
                        best_in = -1;
                        best_out = j;
                    }
                }
            }
            for (Index a = 0; a < size; ++a)
            {
                const double haa = h(a, a);
                const double removed = gain - beta(a) * beta(a) / haa;
                const double d = s(j, j) - (cu - u(a) * u(a) / haa);
                if (!(d > floor))
                    continue;
                const double r = m(j) - (cb - u(a) * beta(a) / haa);
                const double g = removed + r * r / d;
                if (g > best)
                {
                    best = g;
                    best_in = a;
                    best_out = j;
                }
            }
        }
        if (best_out < 0 || best - gain <= 1e-13 * std::max(1.0, std::abs(gain)))
            break;
        std::vector<Index> trial = support;
        if (best_in < 0)
            trial.push_back(best_out);
        else
            trial[best_in] = best_out;
        Matrix h2;
        Vector b2;
        const double g2 = support_gain(m, s, trial, floor, &h2, &b2);
        if (!(g2 > gain))
            break;
        if (best_in >= 0)
            in[support[best_in]] = 0;
        in[best_out] = 1;
        support = std::move(trial);
        gain = g2;
        h = std::move(h2);
        beta = std::move(b2);
    }
    return gain;
}

struct Candidate
{
    double gain = -std::numeric_limits<double>::infinity();
    std::vector<Index> support;  // sorted
};

bool better(const Candidate& a, const Candidate& b)
{
    if (a.gain != b.gain)
        return a.gain > b.gain;
    return std::lexicographical_compare(a.support.begin(), a.support.end(), b.support.begin(),
                                        b.support.end());
}

std::vector<Index> random_support(StreamRng& rng, Index p, Index k)
{
    std::vector<Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index i = 0; i < k; ++i)
    {
        const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

void check_inputs(const Vector& m, const Matrix& s, Index k)
{
    const Index p = m.size();
    if (s.rows() != p || s.cols() != p)
        throw DomainError("covariance dimension does not match mean");
    if (k < 1 || k > p)
        throw DomainError("best subset selection requires 1 <= k <= p");
}

SolveOutcome finish(const Vector& m, const Matrix& s, std::vector<Index> support,
                    Certificate cert, std::size_t iterations, std::size_t skipped)
{
    std::sort(support.begin(), support.end());
    SolveOutcome out;
    double min_pivot = 0.0;
    solve_on_support(m, s, support, 0.0, out.beta_hat, min_pivot);
    out.objective = quadratic_objective(m, s, out.beta_hat);
    out.certificate = cert;
    out.iterations = iterations;
    out.skipped_supports = skipped;
    out.min_pivot = min_pivot;
    return out;
}

}  // namespace

SolveOutcome bss_exhaustive(const Vector& m, const Matrix& s, Index k, const SolverOptions& opts)
{
    return exhaustive(m, s, k, opts, false);
}

SolveOutcome bss_nonneg_exhaustive(const Vector& m, const Matrix& s, Index k,
                                   const SolverOptions& opts)
{
    return exhaustive(m, s, k, opts, true);
}

SolveOutcome bss_heuristic(const Vector& m, const Matrix& s, Index k, const SolverOptions& opts)
{
    check_inputs(m, s, k);
    const Index p = m.size();
    const double floor = pivot_floor(s, opts.pd_tolerance);
    std::size_t skipped = 0;
    std::size_t iterations = 0;

    Candidate best;
    best.support = forward_stepwise(m, s, k, floor, skipped);
    if (best.support.empty() && skipped == static_cast<std::size_t>(p) && !m.isZero(0.0))
        throw_all_singular(m, s);
    best.gain = swap_search(m, s, k, floor, opts.max_iterations, best.support, iterations);
    std::sort(best.support.begin(), best.support.end());

    const auto restarts = static_cast<std::size_t>(std::max(opts.restarts, 0));
    std::vector<Candidate> starts(restarts);
    std::vector<std::size_t> start_iterations(restarts, 0);
    parallel_for(restarts, opts.workers, [&](std::size_t r) {
        StreamRng rng = child_stream(opts.seed, r + 1);
        for (int attempt = 0; attempt < 20; ++attempt)
        {
            auto support = random_support(rng, p, k);
            if (!std::isfinite(support_gain(m, s, support, floor)))
                continue;
            Candidate c;
            c.gain = swap_search(m, s, k, floor, opts.max_iterations, support,
                                 start_iterations[r]);
            c.support = std::move(support);
            std::sort(c.support.begin(), c.support.end());
            starts[r] = std::move(c);
            break;
        }
    });
    for (std::size_t r = 0; r < restarts; ++r)
    {
        iterations += start_iterations[r];
        if (std::isfinite(starts[r].gain) && better(starts[r], best))
            best = std::move(starts[r]);
    }
    return finish(m, s, std::move(best.support), Certificate::HeuristicLocalOpt, iterations,
                  skipped);
}

namespace {

/// Minimum of the objective over {b >= 0, supp(b) within `support`}; returns
/// gain 1 - objective and fills beta (full length).
double nonneg_support_gain(const Vector& m, const Matrix& s, const std::vector<Index>& support,
                           const SolverOptions& opts, Vector& beta)
{
    const auto k = static_cast<Index>(support.size());
    beta = Vector::Zero(m.size());
    if (k == 0)
        return 0.0;
    Matrix sub(k, k);
    Vector rhs(k);
    for (Index a = 0; a < k; ++a)
    {
        rhs(a) = m(support[a]);
        for (Index b = 0; b < k; ++b)
            sub(a, b) = s(support[a], support[b]);
    }
    const SolveOutcome r = nonneg_qp(rhs, sub, opts);
    for (Index a = 0; a < k; ++a)
        beta(support[a]) = r.beta_hat(a);
    return 1.0 - r.objective;
}

}  // namespace

SolveOutcome bss_nonneg_heuristic(const Vector& m, const Matrix& s, Index k,
                                  const SolverOptions& opts)
{
    check_inputs(m, s, k);
    const Index p = m.size();
    std::vector<Index> support;
    std::vector<char> in(static_cast<std::size_t>(p), 0);
    Vector beta;
    double gain = 0.0;
    std::size_t iterations = 0;

    auto improve_once = [&](bool allow_swaps) {
        double best = gain;
        std::vector<Index> best_support;
        for (Index j = 0; j < p; ++j)
        {
            if (in[j])
                continue;
            if (static_cast<Index>(support.size()) < k)
            {
                auto trial = support;
                trial.push_back(j);
                const double g = nonneg_support_gain(m, s, trial, opts, beta);
                if (g > best)
                {
                    best = g;
                    best_support = std::move(trial);
                }
            }
            if (!allow_swaps)
                continue;
            for (std::size_t a = 0; a < support.size(); ++a)
            {
                auto trial = support;
                trial[a] = j;
                const double g = nonneg_support_gain(m, s, trial, opts, beta);
                if (g > best)
                {
                    best = g;
                    best_support = std::move(trial);
                }
            }
        }
        if (best_support.empty() || best - gain <= 1e-13 * std::max(1.0, std::abs(gain)))
            return false;
        for (Index j : support)
            in[j] = 0;
        support = std::move(best_support);
        // Drop coordinates the sign constraint pinned at zero.
        nonneg_support_gain(m, s, support, opts, beta);
        std::erase_if(support, [&](Index j) { return beta(j) == 0.0; });
        for (Index j : support)
            in[j] = 1;
        gain = best;
        return true;
    };

    while (static_cast<Index>(support.size()) < k && improve_once(false))
        ++iterations;
    for (int it = 0; it < opts.max_iterations && improve_once(true); ++it)
        ++iterations;

    std::sort(support.begin(), support.end());
    SolveOutcome out;
    nonneg_support_gain(m, s, support, opts, out.beta_hat);
    out.objective = quadratic_objective(m, s, out.beta_hat);
    out.certificate = Certificate::HeuristicLocalOpt;
    out.iterations = iterations;
    return out;
}

}  // namespace conic
