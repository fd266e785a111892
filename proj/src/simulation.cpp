#include "conic/simulation.hpp"

#include "conic/cones.hpp"
#include "conic/parallel.hpp"
#include "conic/random.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace conic {

TestSpec TestSpec::conic(std::string name, std::string cone, EstimatorChoice::Kind estimator)
{
    return {std::move(name), Kind::Conic, std::move(cone), estimator};
}

std::vector<TestSpec> standard_tests()
{
    return {test_by_name("T1"), test_by_name("T20"), test_by_name("T20d"),
            TestSpec::power_enhancement(), TestSpec::wald()};
}

TestSpec test_by_name(const std::string& name)
{
    if (name == "PE")
        return TestSpec::power_enhancement();
    if (name == "Wald")
        return TestSpec::wald();
    if (name.size() >= 2 && name[0] == 'T')
    {
        std::string body = name.substr(1);
        const bool nonneg = body.back() == '+';
        if (nonneg)
            body.pop_back();
        const bool diag = !body.empty() && body.back() == 'd';
        if (diag)
            body.pop_back();
        const bool numeric = !body.empty() && body.size() < 7 &&
                             body.find_first_not_of("0123456789") == std::string::npos &&
                             body[0] != '0';
        if (numeric)
            return TestSpec::conic(name, (nonneg ? "ksparse+:" : "ksparse:") + body,
                                   diag ? EstimatorChoice::Kind::Diagonal
                                        : EstimatorChoice::Kind::Full);
    }
    throw ParseError("unknown test name '" + name + "'");
}

void SimConfig::validate() const
{
    if (n < 2)
        throw DomainError("n must be at least 2");
    if (p < 1)
        throw DomainError("p must be at least 1");
    if (!(rho >= 0.0 && rho < 1.0))
        throw DomainError("rho must lie in [0, 1)");
    if (s < 0 || s > p)
        throw DomainError("s must lie in [0, p]");
    if (!std::isfinite(b))
        throw DomainError("b must be finite");
    if (tests.empty())
        throw DomainError("at least one test is required");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("alpha must lie in (0, 1)");
    if (repetitions < 1)
        throw DomainError("repetitions must be at least 1");
    if (resamples < 2)
        throw DomainError("resamples must be at least 2");
    for (const auto& t : tests)
        if (t.kind == TestSpec::Kind::Conic)
            parse_cone(t.cone, p);
}

Matrix equicorr_factor(Index p, double rho)
{
    if (!(rho >= 0.0 && rho < 1.0))
        throw DomainError("rho must lie in [0, 1)");
    if (p < 1)
        throw DomainError("p must be at least 1");
    Matrix sigma = Matrix::Constant(p, p, rho);
    sigma.diagonal().setOnes();
    Eigen::LLT<Matrix> llt(sigma);
    return llt.matrixU();
}

Vector mu_vector(Index p, Index s, double b)
{
    if (s < 0 || s > p)
        throw DomainError("sparsity s must lie in [0, p]");
    Vector mu = Vector::Zero(p);
    mu.head(s).setConstant(b);
    return mu;
}

namespace {

DataMatrix generate(const SimConfig& cfg, const Matrix& factor, const Vector& mu,
                    std::uint64_t rep)
{
    StreamRng rng = child_stream(cfg.master_seed, rep);
    Matrix e(cfg.n, cfg.p);
    for (Index i = 0; i < cfg.n; ++i)
        for (Index j = 0; j < cfg.p; ++j)
            e(i, j) = rng.normal();
    Matrix x = e * factor;
    x.rowwise() += mu.transpose();
    return DataMatrix(std::move(x));
}

}  // namespace

DataMatrix generate_data(const SimConfig& cfg, std::uint64_t rep_index)
{
    return generate(cfg, equicorr_factor(cfg.p, cfg.rho), mu_vector(cfg.p, cfg.s, cfg.b),
                    rep_index);
}

double b_lookup(Index n, Index s)
{
    if (n == 30 && s == 1)
        return 0.75;
    if (n == 30 && s == 20)
        return 0.25;
    if (n == 250 && s == 1)
        return 0.25;
    if (n == 250 && s == 20)
        return 0.07;
    throw DomainError("no tabulated b for n=" + std::to_string(n) + ", s=" + std::to_string(s) +
                      "; give b explicitly");
}

SimResult run_experiment(const SimConfig& cfg)
{
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const Matrix factor = equicorr_factor(cfg.p, cfg.rho);
    const Vector mu = mu_vector(cfg.p, cfg.s, cfg.b);

    std::vector<Cone> cones;
    for (const auto& t : cfg.tests)
        cones.push_back(t.kind == TestSpec::Kind::Conic ? parse_cone(t.cone, cfg.p)
                                                        : Cone::full_space(cfg.p));

    struct Cell
    {
        char reject = 0;
        char failed = 0;
        char fallback = 0;
        std::size_t resample_failures = 0;
    };
    const std::size_t tests = cfg.tests.size();
    std::vector<Cell> cells(cfg.repetitions * tests);

    parallel_for(cfg.repetitions, cfg.workers, [&](std::size_t rep) {
        const DataMatrix x = generate(cfg, factor, mu, rep);
        const std::uint64_t rep_key = child_key(cfg.master_seed, rep);
        RandomizationOptions ropts;
        ropts.alpha = cfg.alpha;
        ropts.resamples = cfg.resamples;
        ropts.seed = child_key(rep_key, 1);
        ropts.solver = cfg.solver;
        const std::uint64_t coin_seed = child_key(rep_key, 2);
        for (std::size_t t = 0; t < tests; ++t)
        {
            Cell& cell = cells[rep * tests + t];
            const TestSpec& spec = cfg.tests[t];
            try
            {
                switch (spec.kind)
                {
                case TestSpec::Kind::Conic:
                {
                    const auto r = randomization_test(x, cones[t], EstimatorChoice{spec.estimator, {}},
                                                      ropts);
                    cell.reject = r.reject;
                    cell.resample_failures = r.resample_failures;
                    break;
                }
                case TestSpec::Kind::PowerEnhancement:
                {
                    const auto r = power_enhancement_test(x, cfg.alpha, coin_seed);
                    cell.reject = r.combined_reject;
                    cell.fallback = r.fallback_randomized;
                    break;
                }
                case TestSpec::Kind::Wald:
                    if (x.cols() < x.rows())
                        cell.reject = hotelling_wald_test(x, cfg.alpha).reject;
                    else
                    {
                        cell.fallback = 1;
                        cell.reject = child_stream(coin_seed, 0).bernoulli(cfg.alpha);
                    }
                    break;
                }
            }
            catch (const ExistenceError&)
            {
                cell.failed = 1;
            }
            catch (const DegenerateInputError&)
            {
                cell.failed = 1;
            }
        }
    });

    SimResult result;
    result.config = cfg;
    result.repetitions = cfg.repetitions;
    for (std::size_t t = 0; t < tests; ++t)
    {
        TestResult tr;
        tr.name = cfg.tests[t].name;
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep)
        {
            const Cell& cell = cells[rep * tests + t];
            tr.rejections += cell.reject;
            tr.failures += cell.failed;
            tr.fallbacks += cell.fallback;
            tr.resample_failures += cell.resample_failures;
        }
        tr.reject_rate = double(tr.rejections) / double(cfg.repetitions);
        tr.mc_se = std::sqrt(tr.reject_rate * (1.0 - tr.reject_rate) / double(cfg.repetitions));
        result.tests.push_back(std::move(tr));
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_csv_header(std::ostream& out)
{
    out << "n,p,rho,s,b,test_name,alpha,reps,resamples,seed,reject_rate,mc_se,failures,"
           "wall_seconds\n";
}

void write_csv_rows(std::ostream& out, const SimResult& result)
{
    const SimConfig& c = result.config;
    for (const auto& t : result.tests)
    {
        std::ostringstream row;
        row << std::setprecision(10) << c.n << ',' << c.p << ',' << c.rho << ',' << c.s << ','
            << c.b << ',' << t.name << ',' << c.alpha << ',' << result.repetitions << ','
            << c.resamples << ',' << c.master_seed << ',' << t.reject_rate << ',' << t.mc_se
            << ',' << t.failures << ',' << result.wall_seconds << '\n';
        out << row.str();
    }
}

std::string to_json(const SimResult& result)
{
    const SimConfig& c = result.config;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& t : result.tests)
        rows.push_back({{"n", c.n},
                        {"p", c.p},
                        {"rho", c.rho},
                        {"s", c.s},
                        {"b", c.b},
                        {"test_name", t.name},
                        {"alpha", c.alpha},
                        {"reps", result.repetitions},
                        {"resamples", c.resamples},
                        {"seed", c.master_seed},
                        {"reject_rate", t.reject_rate},
                        {"mc_se", t.mc_se},
                        {"failures", t.failures},
                        {"resample_failures", t.resample_failures},
                        {"fallbacks", t.fallbacks},
                        {"wall_seconds", result.wall_seconds}});
    return rows.dump();
}

}  // namespace conic
