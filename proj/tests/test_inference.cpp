#include "conic/conic_stat.hpp"
#include "conic/distributions.hpp"
#include "conic/errors.hpp"
#include "conic/inference.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <set>

using namespace conic;
using Catch::Approx;

namespace {

Cone one_sided_first(Index p)
{
    return Cone::intersection({Cone::coordinate(p, 0), Cone::nonneg_orthant(p)});
}

}  // namespace

TEST_CASE("full group randomization on two observations")
{
    Matrix x(2, 1);
    x << 1, 2;
    RandomizationOptions opts;
    opts.resamples = 4;
    opts.alpha = 0.25;
    const auto est = EstimatorChoice::fixed_matrix(
        CovEstimate::validated(Matrix::Identity(1, 1), CovStructure::Full));
    const auto r = randomization_test(DataMatrix(x), one_sided_first(1), est, opts);
    CHECK(r.full_enumeration);
    CHECK(r.resample_count == 4);
    CHECK(r.T_observed == Approx(1.5));
    std::vector<double> sorted = r.resample_statistics;
    std::sort(sorted.rbegin(), sorted.rend());
    CHECK(sorted == std::vector<double>{1.5, 0.5, 0.0, 0.0});
    CHECK(r.p_value == 0.25);
    CHECK(r.reject);
    CHECK(r.critical_value == 1.5);
}

TEST_CASE("observed statistic below every resample has p-value one")
{
    Matrix x(3, 1);
    x << -1, -2, -3;
    RandomizationOptions opts;
    opts.resamples = 8;
    const auto r = randomization_test(DataMatrix(x), one_sided_first(1),
                                      EstimatorChoice::fixed_matrix(CovEstimate::validated(
                                          Matrix::Identity(1, 1), CovStructure::Full)),
                                      opts);
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.reject);
}

TEST_CASE("full group p-value matches direct enumeration")
{
    auto rng = child_stream(51, 0);
    const DataMatrix x(oracle::random_normal(6, 3, rng) + Matrix::Constant(6, 3, 0.4));
    RandomizationOptions opts;
    opts.resamples = 1000;
    const auto r = randomization_test(x, Cone::k_sparse(3, 2), EstimatorChoice::diagonal(), opts);
    REQUIRE(r.resample_count == 64);

    std::vector<double> stats;
    for (int mask = 0; mask < 64; ++mask)
    {
        Matrix y = x.values();
        for (int i = 0; i < 6; ++i)
            if (mask & (1 << i))
                y.row(i) *= -1.0;
        const DataMatrix dy(y);
        stats.push_back(conic_statistic(sample_mean(dy), diagonal_covariance(dy), Cone::k_sparse(3, 2)).T);
    }
    const double observed = stats[0];
    const auto count = std::count_if(stats.begin(), stats.end(),
                                     [&](double t) { return t >= observed - 1e-9; });
    CHECK(r.T_observed == Approx(observed).epsilon(1e-10));
    CHECK(r.p_value == Approx(double(count) / 64.0));
}

TEST_CASE("reflection masks are distinct and exclude the identity")
{
    const auto masks = reflection_masks(30, 1000, 7);
    REQUIRE(masks.size() == 1000);
    CHECK(std::all_of(masks.front().begin(), masks.front().end(), [](auto w) { return w == 0; }));
    std::set<std::vector<std::uint64_t>> seen(masks.begin(), masks.end());
    CHECK(seen.size() == 1000);
    for (std::size_t i = 1; i < masks.size(); ++i)
        CHECK(masks[i][0] != 0);
    CHECK(masks == reflection_masks(30, 1000, 7));
    CHECK(masks != reflection_masks(30, 1000, 8));

    const auto wide = reflection_masks(100, 50, 3);
    CHECK(wide.front().size() == 2);
    for (const auto& m : wide)
        CHECK((m[1] >> 36) == 0);
    CHECK(reflection_masks(4, 1000, 0).size() == 16);
}

TEST_CASE("randomization test is deterministic across worker counts")
{
    auto rng = child_stream(52, 0);
    const DataMatrix x(oracle::random_normal(15, 20, rng));
    RandomizationOptions one;
    one.resamples = 200;
    one.seed = 99;
    RandomizationOptions many = one;
    many.workers = 4;
    const auto a = randomization_test(x, Cone::k_sparse(20, 3), EstimatorChoice::full(), one);
    const auto b = randomization_test(x, Cone::k_sparse(20, 3), EstimatorChoice::full(), many);
    CHECK(a.resample_statistics == b.resample_statistics);
    CHECK(a.p_value == b.p_value);
    CHECK(a.p_value >= 1.0 / 200.0);
}

TEST_CASE("randomization test argument checks")
{
    const DataMatrix x(Matrix::Identity(3, 2));
    RandomizationOptions opts;
    opts.alpha = 1.0;
    CHECK_THROWS_AS(randomization_test(x, Cone::full_space(2), EstimatorChoice::full(), opts),
                    DomainError);
    opts.alpha = 0.05;
    opts.resamples = 1;
    CHECK_THROWS_AS(randomization_test(x, Cone::full_space(2), EstimatorChoice::full(), opts),
                    DomainError);
    opts.resamples = 10;
    CHECK_THROWS_AS(randomization_test(x, Cone::full_space(3), EstimatorChoice::full(), opts),
                    DomainError);
}

TEST_CASE("F quantiles")
{
    for (int d : {1, 3, 10, 57})
        CHECK(f_quantile(d, d, 0.5) == Approx(1.0).epsilon(1e-12));
    const double oracle_value = oracle::f1_quantile_bisect(10, 0.95);
    CHECK(oracle_value == Approx(4.9646).margin(5e-5));
    CHECK(f_quantile(1, 10, 0.95) == Approx(oracle_value).epsilon(1e-8));
    CHECK(std::abs(f_cdf(3, 7, f_quantile(3, 7, 0.9)) - 0.9) <= 1e-10);
    CHECK_THROWS_AS(f_quantile(0, 3, 0.5), DomainError);
    CHECK_THROWS_AS(f_quantile(2, 3, 1.0), DomainError);
}

TEST_CASE("Hotelling test")
{
    auto rng = child_stream(53, 0);
    const DataMatrix x(oracle::random_normal(40, 5, rng));
    const auto r = hotelling_wald_test(x, 0.05);
    const auto m = sample_mean(x);
    const auto s = sample_covariance(x);
    CHECK(r.W == Approx(40.0 * m.m.dot(s.matrix.ldlt().solve(m.m))));
    CHECK(r.critical_value == Approx(5.0 * 40.0 / 35.0 * f_quantile(5, 35, 0.95)));
    CHECK_THROWS_AS(hotelling_wald_test(DataMatrix(oracle::random_normal(5, 5, rng)), 0.05),
                    UnsupportedOperationError);
}

TEST_CASE("screening statistic")
{
    auto rng = child_stream(54, 0);
    const DataMatrix big(oracle::random_normal(250, 500, rng));
    const auto s = screening_statistic(big);
    CHECK(s.delta == Approx(std::log(std::log(250.0)) * std::sqrt(std::log(500.0))));
    CHECK(s.delta == Approx(4.2591).margin(1e-3));

    Matrix x = oracle::random_normal(40, 4, rng);
    for (Index j = 0; j < 4; ++j)
        x.col(j).array() -= x.col(j).mean();
    CHECK(screening_statistic(DataMatrix(x)).J0 == 0.0);
    CHECK(screening_statistic(DataMatrix(x)).selected.empty());

    const DataMatrix centered(x);
    const double sd = std::sqrt(sample_covariance(centered).matrix(0, 0) / 40.0);
    const double delta = screening_statistic(centered).delta;
    x.col(0).array() += 10.0 * sd * delta;
    const auto one = screening_statistic(DataMatrix(x));
    CHECK(one.selected == std::vector<Index>{0});
    const double m1 = 10.0 * sd * delta;
    CHECK(one.J0 == Approx(2.0 * m1 * m1 / (sd * sd)));

    CHECK_THROWS_AS(screening_statistic(DataMatrix(oracle::random_normal(2, 3, rng))), DomainError);
}

TEST_CASE("power enhancement composite")
{
    auto rng = child_stream(55, 0);
    Matrix x = oracle::random_normal(40, 4, rng);
    for (Index j = 0; j < 4; ++j)
        x.col(j).array() -= x.col(j).mean();
    const auto quiet = power_enhancement_test(DataMatrix(x), 0.05, 1);
    CHECK_FALSE(quiet.initial_reject);
    CHECK_FALSE(quiet.enhancement_reject);
    CHECK_FALSE(quiet.combined_reject);
    CHECK_FALSE(quiet.fallback_randomized);

    const DataMatrix wide(oracle::random_normal(10, 20, rng));
    int coins = 0;
    for (std::uint64_t seed = 0; seed < 2000; ++seed)
    {
        const auto r = power_enhancement_test(wide, 0.05, seed);
        CHECK(r.fallback_randomized);
        CHECK(r.combined_reject == (r.initial_reject || r.enhancement_reject));
        coins += r.initial_reject;
    }
    CHECK(coins > 60);
    CHECK(coins < 140);
}
