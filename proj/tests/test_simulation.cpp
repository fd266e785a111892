#include "conic/errors.hpp"
#include "conic/simulation.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace conic;
using Catch::Approx;

namespace {

Matrix equicorrelation(Index p, double rho)
{
    Matrix s = Matrix::Constant(p, p, rho);
    s.diagonal().setOnes();
    return s;
}

}  // namespace

TEST_CASE("equicorrelation factor")
{
    CHECK(equicorr_factor(4, 0.0).isApprox(Matrix::Identity(4, 4)));
    Matrix expected(2, 2);
    expected << 1, 0.5, 0, std::sqrt(0.75);
    CHECK((equicorr_factor(2, 0.5) - expected).cwiseAbs().maxCoeff() < 1e-15);
    for (double rho : {0.0, 0.5, 0.7, 0.95})
    {
        const Matrix a = equicorr_factor(100, rho);
        CHECK((a.transpose() * a - equicorrelation(100, rho)).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(a.isUpperTriangular());
    }
    CHECK_THROWS_AS(equicorr_factor(3, 1.0), DomainError);
    CHECK_THROWS_AS(equicorr_factor(3, -0.1), DomainError);
}

TEST_CASE("mean vector and signal grid")
{
    Vector expected(5);
    expected << 0.25, 0.25, 0, 0, 0;
    CHECK(mu_vector(5, 2, 0.25) == expected);
    CHECK(mu_vector(4, 0, 1.0).isZero(0.0));
    CHECK(mu_vector(3, 3, 1.0) == Vector::Ones(3));
    CHECK_THROWS_AS(mu_vector(3, 4, 1.0), DomainError);

    CHECK(b_lookup(30, 1) == 0.75);
    CHECK(b_lookup(30, 20) == 0.25);
    CHECK(b_lookup(250, 1) == 0.25);
    CHECK(b_lookup(250, 20) == 0.07);
    CHECK_THROWS_AS(b_lookup(100, 5), DomainError);
}

TEST_CASE("generated data")
{
    SimConfig cfg;
    cfg.n = 10000;
    cfg.p = 3;
    cfg.master_seed = 5;
    const auto x = generate_data(cfg, 0);
    const Matrix cov = sample_covariance(x).matrix;
    CHECK((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.05);
    CHECK(generate_data(cfg, 0).values() == x.values());
    CHECK(generate_data(cfg, 1).values() != x.values());

    cfg.s = 1;
    cfg.b = 0.3;
    const auto shifted = generate_data(cfg, 2);
    CHECK(std::abs(sample_mean(shifted).m(0) - 0.3) < 4.0 / 100.0);

    cfg.rho = 0.7;
    cfg.s = 0;
    const Matrix corr = sample_covariance(generate_data(cfg, 3)).matrix;
    CHECK((corr - equicorrelation(3, 0.7)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("experiments are deterministic across worker counts")
{
    SimConfig cfg;
    cfg.n = 12;
    cfg.p = 8;
    cfg.rho = 0.5;
    cfg.tests = {test_by_name("T1"), test_by_name("T3"), test_by_name("T3d"),
                 TestSpec::power_enhancement(), TestSpec::wald()};
    cfg.repetitions = 24;
    cfg.resamples = 50;
    cfg.master_seed = 17;
    std::vector<SimResult> runs;
    for (unsigned w : {1u, 4u, 16u})
    {
        cfg.workers = w;
        runs.push_back(run_experiment(cfg));
    }
    for (std::size_t t = 0; t < cfg.tests.size(); ++t)
    {
        CHECK(runs[0].tests[t].rejections == runs[1].tests[t].rejections);
        CHECK(runs[0].tests[t].rejections == runs[2].tests[t].rejections);
        CHECK(runs[0].tests[t].reject_rate * 24 == Approx(double(runs[0].tests[t].rejections)));
    }
}

TEST_CASE("single repetition smoke run and output rows")
{
    SimConfig cfg;
    cfg.n = 10;
    cfg.p = 6;
    cfg.tests = standard_tests();
    cfg.tests[1] = test_by_name("T2");
    cfg.tests[2] = test_by_name("T2d");
    cfg.repetitions = 1;
    cfg.resamples = 20;
    const auto r = run_experiment(cfg);
    for (const auto& t : r.tests)
        CHECK((t.reject_rate == 0.0 || t.reject_rate == 1.0));
    CHECK(r.tests[3].fallbacks == 0);
    CHECK(r.tests[4].fallbacks == 0);

    std::ostringstream csv;
    write_csv_header(csv);
    write_csv_rows(csv, r);
    std::istringstream lines(csv.str());
    std::string line;
    int count = 0;
    while (std::getline(lines, line))
    {
        CHECK(std::count(line.begin(), line.end(), ',') == 13);
        ++count;
    }
    CHECK(count == 6);
    CHECK(to_json(r).find("\"test_name\":\"T2d\"") != std::string::npos);
}

TEST_CASE("configuration validation")
{
    SimConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.tests = {TestSpec::wald()};
    cfg.validate();
    cfg.rho = 1.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.rho = 0.0;
    cfg.s = 101;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.s = 0;
    cfg.tests = {test_by_name("T200")};
    CHECK_THROWS(cfg.validate());
    CHECK_THROWS_AS(test_by_name("T0"), ParseError);
    CHECK_THROWS_AS(test_by_name("lasso"), ParseError);
    CHECK_THROWS_AS(test_by_name("T+"), ParseError);
    CHECK_THROWS_AS(test_by_name("Td+"), ParseError);
    CHECK_THROWS_AS(test_by_name("T5+d"), ParseError);
}

TEST_CASE("sign-restricted test names")
{
    const auto a = test_by_name("T20d+");
    CHECK(a.cone == "ksparse+:20");
    CHECK(a.estimator == EstimatorChoice::Kind::Diagonal);
    const auto b = test_by_name("T3+");
    CHECK(b.cone == "ksparse+:3");
    CHECK(b.estimator == EstimatorChoice::Kind::Full);
    CHECK(test_by_name("T3").cone == "ksparse:3");
}
