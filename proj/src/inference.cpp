#include "conic/inference.hpp"

#include "conic/conic_stat.hpp"
#include "conic/distributions.hpp"
#include "conic/parallel.hpp"
#include "conic/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace conic {

const char* to_string(EstimatorChoice::Kind kind) noexcept
{
    switch (kind)
    {
    case EstimatorChoice::Kind::Full: return "full";
    case EstimatorChoice::Kind::Diagonal: return "diagonal";
    case EstimatorChoice::Kind::Pooled: return "pooled";
    case EstimatorChoice::Kind::Fixed: return "fixed";
    }
    return "unknown";
}

namespace {

using Mask = std::vector<std::uint64_t>;

bool flipped(const Mask& mask, Index row)
{
    return (mask[static_cast<std::size_t>(row / 64)] >> (row % 64)) & 1U;
}

CovEstimate reflected_covariance(const Matrix& gram, const Vector& m,
                                 const EstimatorChoice& estimator)
{
    const Index p = m.size();
    CovEstimate s;
    switch (estimator.kind)
    {
    case EstimatorChoice::Kind::Full:
        s.matrix = gram - m * m.transpose();
        s.matrix = 0.5 * (s.matrix + s.matrix.transpose());
        s.structure = CovStructure::Full;
        break;
    case EstimatorChoice::Kind::Diagonal:
        s.matrix = (gram.diagonal() - m.cwiseAbs2()).cwiseMax(0.0).asDiagonal();
        s.structure = CovStructure::Diagonal;
        break;
    case EstimatorChoice::Kind::Pooled:
    {
        const double level = std::max(0.0, (gram.trace() - m.squaredNorm()) / double(p));
        s.matrix = level * Matrix::Identity(p, p);
        s.structure = CovStructure::Pooled;
        break;
    }
    case EstimatorChoice::Kind::Fixed:
        if (!estimator.fixed)
            throw MissingParameterError("fixed estimator requires a covariance matrix");
        return *estimator.fixed;
    }
    return s;
}

}  // namespace

std::vector<Mask> reflection_masks(Index n, std::uint64_t count, std::uint64_t seed)
{
    if (n < 1)
        throw DomainError("reflections need at least one observation");
    const auto words = static_cast<std::size_t>((n + 63) / 64);
    const bool enumerable = n < 64 && count >= (std::uint64_t{1} << n);
    std::vector<Mask> masks;
    if (enumerable)
    {
        const std::uint64_t total = std::uint64_t{1} << n;
        masks.reserve(total);
        for (std::uint64_t r = 0; r < total; ++r)
            masks.push_back(Mask{r});
        return masks;
    }
    masks.reserve(count);
    masks.emplace_back(words, 0);
    std::set<Mask> seen{masks.front()};
    const unsigned tail_bits = static_cast<unsigned>(n % 64);
    const std::uint64_t tail_mask = tail_bits ? (std::uint64_t{1} << tail_bits) - 1 : ~0ULL;
    for (std::uint64_t i = 1; i < count; ++i)
    {
        StreamRng rng = child_stream(seed, i);
        Mask mask(words);
        do
        {
            for (auto& w : mask)
                w = rng();
            mask.back() &= tail_mask;
        } while (seen.count(mask));
        seen.insert(mask);
        masks.push_back(std::move(mask));
    }
    return masks;
}

double reflected_statistic(const DataMatrix& x, const Matrix& gram, const Mask& mask,
                           const Cone& c, const EstimatorChoice& estimator,
                           const SolverOptions& opts)
{
    const Index n = x.rows();
    Vector signs(n);
    for (Index i = 0; i < n; ++i)
        signs(i) = flipped(mask, i) ? -1.0 : 1.0;
    MeanEstimate m{x.values().transpose() * signs / double(n)};
    return conic_statistic(m, reflected_covariance(gram, m.m, estimator), c, opts).T;
}

RandomizationOutcome randomization_test(const DataMatrix& x, const Cone& c,
                                        const EstimatorChoice& estimator,
                                        const RandomizationOptions& opts)
{
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0))
        throw DomainError("alpha must lie in (0, 1)");
    if (opts.resamples < 2)
        throw DomainError("randomization test needs at least 2 resamples");
    if (c.dim() != x.cols())
        throw DomainError("cone dimension does not match the data");
    if (estimator.kind == EstimatorChoice::Kind::Fixed &&
        (!estimator.fixed || estimator.fixed->size() != x.cols()))
        throw DomainError("fixed covariance matrix does not match the data");

    RandomizationOutcome out;
    out.seed = opts.seed;
    out.requested_count = opts.resamples;
    const auto masks = reflection_masks(x.rows(), opts.resamples, opts.seed);
    out.resample_count = masks.size();
    out.full_enumeration = x.rows() < 64 && masks.size() == (std::uint64_t{1} << x.rows());

    const Matrix gram = gram_matrix(x).matrix;
    SolverOptions solver = opts.solver;
    solver.workers = 1;
    solver.diagnostics = false;

    out.T_observed = reflected_statistic(x, gram, masks.front(), c, estimator, solver);

    std::vector<double> stats(masks.size(), 0.0);
    std::vector<char> failed(masks.size(), 0);
    stats[0] = out.T_observed;
    parallel_for(masks.size() - 1, opts.workers, [&](std::size_t i) {
        try
        {
            stats[i + 1] = reflected_statistic(x, gram, masks[i + 1], c, estimator, solver);
        }
        catch (const ExistenceError&)
        {
            failed[i + 1] = 1;
        }
        catch (const DegenerateInputError&)
        {
            failed[i + 1] = 1;
        }
    });
    out.resample_failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));

    const double threshold =
        out.T_observed - opts.tie_tolerance * std::max(1.0, std::abs(out.T_observed));
    const auto at_least =
        std::count_if(stats.begin(), stats.end(), [&](double t) { return t >= threshold; });
    const double total = static_cast<double>(stats.size());
    out.p_value = static_cast<double>(at_least) / total;
    out.reject = out.p_value <= opts.alpha;

    std::vector<double> sorted = stats;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto top = static_cast<std::size_t>(std::ceil(opts.alpha * total - 1e-9));
    out.critical_value = sorted[std::max<std::size_t>(top, 1) - 1];
    out.resample_statistics = std::move(stats);
    return out;
}

WaldOutcome hotelling_wald_test(const DataMatrix& x, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("alpha must lie in (0, 1)");
    const Index n = x.rows();
    const Index p = x.cols();
    if (p >= n)
        throw UnsupportedOperationError("Wald test is not defined when p >= n");
    const auto m = sample_mean(x);
    const auto s = sample_covariance(x);
    const double t = wald_statistic(m, s).T;
    WaldOutcome out;
    out.W = double(n) * t * t;
    out.critical_value = double(p) * double(n) / double(n - p) *
                         f_quantile(static_cast<int>(p), static_cast<int>(n - p), 1.0 - alpha);
    out.reject = out.W > out.critical_value;
    return out;
}

ScreeningOutcome screening_statistic(const DataMatrix& x)
{
    const Index n = x.rows();
    const Index p = x.cols();
    if (!(std::log(double(n)) > 1.0))
        throw DomainError("screening threshold needs n > e");
    ScreeningOutcome out;
    out.delta = std::log(std::log(double(n))) * std::sqrt(std::log(double(p)));
    const auto m = sample_mean(x);
    const auto s = sample_covariance(x);
    for (Index j = 0; j < p; ++j)
    {
        const double var = s.matrix(j, j) / double(n);
        if (!(var > 0.0))
            throw DegenerateInputError("screening statistic needs positive variances");
        if (std::abs(m.m(j)) > std::sqrt(var) * out.delta)
        {
            out.selected.push_back(j);
            out.J0 += m.m(j) * m.m(j) / var;
        }
    }
    out.J0 *= std::sqrt(double(p));
    return out;
}

CompositeTestOutcome power_enhancement_test(const DataMatrix& x, double alpha,
                                            std::uint64_t seed)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("alpha must lie in (0, 1)");
    CompositeTestOutcome out;
    if (x.cols() < x.rows())
        out.initial_reject = hotelling_wald_test(x, alpha).reject;
    else
    {
        out.fallback_randomized = true;
        out.initial_reject = child_stream(seed, 0).bernoulli(alpha);
    }
    out.enhancement_J0 = screening_statistic(x).J0;
    out.enhancement_reject = out.enhancement_J0 > 0.0;
    out.combined_reject = out.initial_reject || out.enhancement_reject;
    return out;
}

}  // namespace conic
