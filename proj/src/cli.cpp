#include "conic/cli.hpp"

#include "conic/conic_stat.hpp"
#include "conic/inference.hpp"
#include "conic/parallel.hpp"
#include "conic/simulation.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace conic {

namespace {

using json = nlohmann::json;

struct CliConfig
{
    std::string input;
    std::string cone = "full";
    std::string estimator = "full";
    bool header = false;
    bool regression = false;
    bool decomposition = false;
    double alpha = 0.05;
    std::uint64_t resamples = 1000;
    std::uint64_t seed = 0;
    unsigned workers = default_workers();
    std::string format = "csv";
    std::string out;
};

std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

std::string join(const Vector& v)
{
    std::string s;
    for (Index i = 0; i < v.size(); ++i)
        s += (i ? ";" : "") + fmt(v(i));
    return s;
}

std::vector<double> to_std(const Vector& v)
{
    return {v.data(), v.data() + v.size()};
}

std::vector<Index> one_based(const std::vector<Index>& idx)
{
    std::vector<Index> out;
    for (Index j : idx)
        out.push_back(j + 1);
    return out;
}

DataMatrix load_data(const CliConfig& cfg)
{
    if (cfg.input == "-")
        return DataMatrix::from_csv(std::cin, cfg.header);
    return DataMatrix::from_csv(std::filesystem::path(cfg.input), cfg.header);
}

CovEstimate estimate(const DataMatrix& x, const std::string& kind)
{
    if (kind == "full")
        return sample_covariance(x);
    if (kind == "diagonal")
        return diagonal_covariance(x);
    return pooled_covariance(x);
}

EstimatorChoice choice(const std::string& kind)
{
    if (kind == "full")
        return EstimatorChoice::full();
    if (kind == "diagonal")
        return EstimatorChoice::diagonal();
    return EstimatorChoice::pooled();
}

/// Writes to --out when given, else to `out`.
class Sink
{
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty())
        {
            file_.open(path);
            if (!file_)
                throw Error("cannot open output file '" + path + "'");
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }
    bool to_file() const { return file_.is_open(); }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

void emit(const json& doc, const std::string& format, std::ostream& os)
{
    if (format == "json")
    {
        os << doc.dump(2) << '\n';
        return;
    }
    os << "key,value\n";
    for (const auto& [key, value] : doc.items())
    {
        if (value.is_object())
        {
            for (const auto& [inner, v] : value.items())
                os << key << '.' << inner << ',' << (v.is_string() ? v.get<std::string>() : v.dump())
                   << '\n';
        }
        else if (value.is_array())
        {
            std::string s;
            for (std::size_t i = 0; i < value.size(); ++i)
            {
                const auto& e = value[i];
                s += (i ? ";" : "") + (e.is_number_float() ? fmt(e.get<double>()) : e.dump());
            }
            os << key << ',' << s << '\n';
        }
        else if (value.is_number_float())
            os << key << ',' << fmt(value.get<double>()) << '\n';
        else if (value.is_string())
            os << key << ',' << value.get<std::string>() << '\n';
        else
            os << key << ',' << value.dump() << '\n';
    }
}

json config_echo(const CliConfig& cfg, const std::string& command)
{
    json c = {{"command", command},
              {"input", cfg.input},
              {"cone", cfg.cone},
              {"estimator", cfg.estimator},
              {"header", cfg.header}};
    if (command == "test")
    {
        c["alpha"] = cfg.alpha;
        c["resamples"] = cfg.resamples;
        c["seed"] = cfg.seed;
    }
    if (command == "stat")
        c["regression"] = cfg.regression;
    return c;
}

int cmd_stat(const CliConfig& cfg, std::ostream& out)
{
    const DataMatrix x = load_data(cfg);
    const Cone cone = parse_cone(cfg.cone, x.cols(), load_directions_csv);
    SolverOptions opts;
    opts.seed = cfg.seed;
    opts.workers = cfg.workers;
    const MeanEstimate m = sample_mean(x);
    const CovEstimate s = estimate(x, cfg.estimator);
    const ConicStatResult r = cfg.regression ? conic_statistic_regression(x, cone, opts)
                                             : conic_statistic(m, s, cone, opts);
    json doc = {{"config", config_echo(cfg, "stat")},
                {"T", r.T},
                {"path", to_string(r.path)},
                {"certificate", to_string(r.solve.certificate)},
                {"support", one_based(r.support)},
                {"lambda_hat", to_std(r.lambda_hat)},
                {"beta_hat", to_std(r.beta_hat)},
                {"min_restricted_eigenvalue", r.min_restricted_eigenvalue}};
    if (cfg.decomposition && r.T > 0.0)
    {
        const CovEstimate ellipsoid = cfg.regression ? sample_covariance(x) : s;
        const auto d = decomposition_points(m, ellipsoid, r);
        doc["projection"] = to_std(d.projection);
        doc["scaled_projection"] = to_std(d.scaled_projection);
        doc["decomposition_length"] = d.length;
    }
    Sink sink(cfg.out, out);
    emit(doc, cfg.format, *sink);
    return 0;
}

int cmd_test(const CliConfig& cfg, std::ostream& out, std::ostream& err)
{
    const DataMatrix x = load_data(cfg);
    const Cone cone = parse_cone(cfg.cone, x.cols(), load_directions_csv);
    RandomizationOptions opts;
    opts.alpha = cfg.alpha;
    opts.resamples = cfg.resamples;
    opts.seed = cfg.seed;
    opts.workers = cfg.workers;
    opts.solver.seed = cfg.seed;
    const auto r = randomization_test(x, cone, choice(cfg.estimator), opts);
    if (r.resample_count < r.requested_count)
        err << "note: " << r.requested_count << " resamples exceed the 2^" << x.rows()
            << " reflections; using full enumeration (" << r.resample_count << ")\n";
    json doc = {{"config", config_echo(cfg, "test")},
                {"T_observed", r.T_observed},
                {"p_value", r.p_value},
                {"critical_value", r.critical_value},
                {"reject", r.reject},
                {"resample_count", r.resample_count},
                {"full_enumeration", r.full_enumeration},
                {"resample_failures", r.resample_failures},
                {"seed", r.seed}};
    Sink sink(cfg.out, out);
    emit(doc, cfg.format, *sink);
    return 0;
}

template <class T>
std::vector<T> list_field(const json& j, const char* key, std::vector<T> fallback)
{
    if (!j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if (v.is_array())
        return v.get<std::vector<T>>();
    return {v.get<T>()};
}

json preset(const std::string& name)
{
    json base = {{"n", {30, 250}},
                 {"p", {100}},
                 {"rho", {0.0, 0.5, 0.7}},
                 {"tests", {"T1", "T20", "T20d", "PE", "Wald"}},
                 {"alpha", 0.05},
                 {"reps", 1000},
                 {"resamples", 1000}};
    if (name == "table2")
        base["s"] = {0};
    else if (name == "table3")
    {
        base["s"] = {1};
        base["tests"] = {"T1", "T20", "T20d", "PE"};
    }
    else if (name == "table4")
    {
        base["s"] = {20};
        base["tests"] = {"T1", "T20", "T20d", "PE"};
    }
    else
        throw ParseError("unknown preset '" + name + "'");
    return base;
}

std::vector<SimConfig> expand_grid(const json& file, std::uint64_t seed_override, bool has_seed,
                                   unsigned workers)
{
    json spec = file.contains("preset") ? preset(file.at("preset").get<std::string>()) : json::object();
    if (file.value("long_run", false))
        spec["p"] = {100, 300, 500};
    for (const auto& [key, value] : file.items())
        if (key != "preset" && key != "long_run")
            spec[key] = value;

    const auto ns = list_field<Index>(spec, "n", {});
    const auto ps = list_field<Index>(spec, "p", {});
    const auto rhos = list_field<double>(spec, "rho", {0.0});
    const auto ss = list_field<Index>(spec, "s", {0});
    const auto names = list_field<std::string>(spec, "tests", {});
    if (ns.empty() || ps.empty())
        throw DomainError("config must list n and p");
    if (names.empty())
        throw DomainError("config must list at least one test");
    std::vector<TestSpec> tests;
    for (const auto& name : names)
        tests.push_back(test_by_name(name));

    std::vector<SimConfig> grid;
    for (Index n : ns)
        for (Index p : ps)
            for (double rho : rhos)
                for (Index s : ss)
                {
                    SimConfig c;
                    c.n = n;
                    c.p = p;
                    c.rho = rho;
                    c.s = s;
                    if (spec.contains("b") && !spec.at("b").is_null())
                        c.b = spec.at("b").get<double>();
                    else
                        c.b = s == 0 ? 0.0 : b_lookup(n, s);
                    c.tests = tests;
                    c.alpha = spec.value("alpha", 0.05);
                    const long long reps = spec.value("reps", 1000LL);
                    const long long resamples = spec.value("resamples", 1000LL);
                    if (reps < 1 || resamples < 2)
                        throw DomainError("reps must be >= 1 and resamples >= 2");
                    c.repetitions = static_cast<std::size_t>(reps);
                    c.resamples = static_cast<std::uint64_t>(resamples);
                    c.master_seed = has_seed ? seed_override : spec.value("seed", std::uint64_t{0});
                    c.workers = workers;
                    c.solver.restarts = spec.value("restarts", 0);
                    c.validate();
                    grid.push_back(std::move(c));
                }
    return grid;
}

void summary_table(const std::vector<SimResult>& results, std::ostream& os)
{
    if (results.empty())
        return;
    os << std::left << std::setw(6) << "n" << std::setw(6) << "p" << std::setw(6) << "rho"
       << std::setw(5) << "s";
    for (const auto& t : results.front().tests)
        os << std::setw(8) << t.name;
    os << '\n';
    for (const auto& r : results)
    {
        std::ostringstream rho;
        rho << std::setprecision(3) << r.config.rho;
        os << std::setw(6) << r.config.n << std::setw(6) << r.config.p << std::setw(6) << rho.str()
           << std::setw(5) << r.config.s;
        for (const auto& t : r.tests)
        {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(3) << t.reject_rate;
            os << std::setw(8) << cell.str();
        }
        os << '\n';
    }
}

int cmd_simulate(const CliConfig& cfg, bool has_seed, std::ostream& out, std::ostream& err)
{
    std::ifstream in(cfg.input);
    if (!in)
        throw Error("cannot open config file '" + cfg.input + "'");
    json file;
    try
    {
        file = json::parse(in);
    }
    catch (const json::parse_error& e)
    {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<SimConfig> grid;
    try
    {
        grid = expand_grid(file, cfg.seed, has_seed, cfg.workers);
    }
    catch (const json::exception& e)
    {
        throw ParseError(std::string("invalid config field: ") + e.what());
    }

    Sink sink(cfg.out, out);
    if (cfg.format == "csv")
        write_csv_header(*sink);
    else
        *sink << "[\n";
    std::vector<SimResult> results;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        results.push_back(run_experiment(grid[i]));
        if (cfg.format == "csv")
            write_csv_rows(*sink, results.back());
        else
        {
            const json rows = json::parse(to_json(results.back()));
            for (std::size_t r = 0; r < rows.size(); ++r)
                *sink << "  " << rows[r].dump()
                      << (i + 1 == grid.size() && r + 1 == rows.size() ? "\n" : ",\n");
        }
        (*sink).flush();
    }
    if (cfg.format == "json")
        *sink << "]\n";
    summary_table(results, sink.to_file() ? out : err);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Conic test statistics, randomization tests and simulations", "conic"};
    app.require_subcommand(1);
    CliConfig cfg;

    const std::vector<std::string> estimators{"full", "diagonal", "pooled"};
    const std::vector<std::string> formats{"csv", "json"};

    auto common = [&](CLI::App* sub, bool data) {
        sub->add_option("--workers", cfg.workers, "Worker threads")
            ->envname("CONIC_WORKERS")
            ->check(CLI::Range(1u, 1024u));
        sub->add_option("--format", cfg.format, "Output format")
            ->envname("CONIC_FORMAT")
            ->check(CLI::IsMember(formats));
        sub->add_option("--out", cfg.out, "Output file (default stdout)");
        if (data)
        {
            sub->add_option("input", cfg.input, "Data CSV file, '-' for stdin")->required();
            sub->add_option("--cone", cfg.cone, "Cone: full, nonneg, coord:J, ksparse:K, "
                                                "ksparse+:K, lasso:T, dirs:FILE")
                ->envname("CONIC_CONE");
            sub->add_option("--estimator", cfg.estimator, "Covariance estimator")
                ->envname("CONIC_ESTIMATOR")
                ->check(CLI::IsMember(estimators));
            sub->add_flag("--header,!--no-header", cfg.header, "Input has a header row")
                ->envname("CONIC_HEADER");
        }
    };

    auto* stat = app.add_subcommand("stat", "Compute the conic statistic");
    common(stat, true);
    stat->add_option("--seed", cfg.seed, "Seed for heuristic restarts")->envname("CONIC_SEED");
    stat->add_flag("--regression", cfg.regression, "Use the regression formulation");
    stat->add_flag("--decomposition", cfg.decomposition, "Emit the geometric decomposition");

    auto* test = app.add_subcommand("test", "Reflection randomization test of a zero mean");
    common(test, true);
    test->add_option("--alpha", cfg.alpha, "Level")
        ->envname("CONIC_ALPHA")
        ->check(CLI::Range(0.0, 1.0));
    test->add_option("--resamples", cfg.resamples, "Reflections M, identity included")
        ->envname("CONIC_RESAMPLES")
        ->check(CLI::Range(std::uint64_t{2}, std::numeric_limits<std::uint64_t>::max()));
    test->add_option("--seed", cfg.seed, "Seed")->envname("CONIC_SEED");

    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo grid from a JSON config");
    common(simulate, false);
    simulate->add_option("config", cfg.input, "JSON config file")->required();
    auto* sim_seed = simulate->add_option("--seed", cfg.seed, "Override the config seed")
                         ->envname("CONIC_SEED");

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return 0;
    }
    catch (const CLI::CallForAllHelp&)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    }
    catch (const CLI::ParseError& e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try
    {
        if (stat->parsed())
            return cmd_stat(cfg, out);
        if (test->parsed())
        {
            if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
                throw DomainError("alpha must lie strictly between 0 and 1");
            return cmd_test(cfg, out, err);
        }
        return cmd_simulate(cfg, sim_seed->count() > 0, out, err);
    }
    catch (const ExistenceError& e)
    {
        err << "statistic does not exist: " << e.what() << '\n';
        const auto& report = e.report();
        if (report.rank_check)
            err << "rank(S) = " << report.rank_check->first << " < k = "
                << report.rank_check->second << '\n';
        if (report.witness)
            err << "witness direction: " << join(*report.witness) << '\n';
        return 2;
    }
    catch (const DegenerateInputError& e)
    {
        err << "degenerate input: " << e.what() << '\n';
        return 2;
    }
    catch (const ParseError& e)
    {
        err << "parse error: " << e.what() << '\n';
        return 1;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace conic
