#pragma once

#include "conic/cones.hpp"
#include "conic/estimators.hpp"
#include "conic/solvers.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace conic {

/// Covariance estimator recomputed on every reflected data set, or a fixed
/// matrix used unchanged.
struct EstimatorChoice
{
    enum class Kind { Full, Diagonal, Pooled, Fixed };

    Kind kind = Kind::Full;
    std::optional<CovEstimate> fixed;

    static EstimatorChoice full() { return {Kind::Full, std::nullopt}; }
    static EstimatorChoice diagonal() { return {Kind::Diagonal, std::nullopt}; }
    static EstimatorChoice pooled() { return {Kind::Pooled, std::nullopt}; }
    static EstimatorChoice fixed_matrix(CovEstimate s) { return {Kind::Fixed, std::move(s)}; }
};

const char* to_string(EstimatorChoice::Kind kind) noexcept;

struct RandomizationOutcome
{
    double T_observed = 0.0;
    /// Resamples actually used, identity included.
    std::uint64_t resample_count = 0;
    /// Requested count, before clamping to 2^n.
    std::uint64_t requested_count = 0;
    bool full_enumeration = false;
    double p_value = 1.0;
    double critical_value = 0.0;
    bool reject = false;
    std::uint64_t seed = 0;
    /// Resamples whose statistic did not exist; their T is set to 0.
    std::size_t resample_failures = 0;
    /// T on every resample, identity first.
    std::vector<double> resample_statistics;
};

struct RandomizationOptions
{
    double alpha = 0.05;
    std::uint64_t resamples = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    SolverOptions solver;
    /// Resample values within this relative distance below T_observed count
    /// as ties.
    double tie_tolerance = 1e-10;
};

/// Reflection randomization test of mu = 0 against the cone C.
RandomizationOutcome randomization_test(const DataMatrix& x, const Cone& c,
                                        const EstimatorChoice& estimator,
                                        const RandomizationOptions& opts);

/// Sign patterns used by the test: bit i of pattern r negates row i. The
/// first pattern is the identity (all zero).
std::vector<std::vector<std::uint64_t>> reflection_masks(Index n, std::uint64_t count,
                                                         std::uint64_t seed);

/// T_C of the reflected data, given G = X'X/n.
double reflected_statistic(const DataMatrix& x, const Matrix& gram,
                           const std::vector<std::uint64_t>& mask, const Cone& c,
                           const EstimatorChoice& estimator, const SolverOptions& opts);

struct WaldOutcome
{
    double W = 0.0;
    double critical_value = 0.0;
    bool reject = false;
};

/// W = n m' S^{-1} m against (pn/(n-p)) F_{p,n-p}(1-alpha). Requires p < n.
WaldOutcome hotelling_wald_test(const DataMatrix& x, double alpha);

struct ScreeningOutcome
{
    double J0 = 0.0;
    std::vector<Index> selected;
    double delta = 0.0;
};

/// delta = log(log n) sqrt(log p); J = {j : |m_j| > sigma_j delta} with
/// sigma_j^2 = S_jj / n; J0 = sqrt(p) sum_J m_j^2 / sigma_j^2.
ScreeningOutcome screening_statistic(const DataMatrix& x);

struct CompositeTestOutcome
{
    bool initial_reject = false;
    double enhancement_J0 = 0.0;
    bool enhancement_reject = false;
    bool combined_reject = false;
    bool fallback_randomized = false;
};

/// Wald test (or, when p >= n, a Bernoulli(alpha) draw from `seed`) OR'd
/// with the screening test J0 > 0.
CompositeTestOutcome power_enhancement_test(const DataMatrix& x, double alpha,
                                            std::uint64_t seed);

}  // namespace conic
