#pragma once

#include "conic/estimators.hpp"
#include "conic/inference.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace conic {

struct TestSpec
{
    enum class Kind { Conic, PowerEnhancement, Wald };

    std::string name;
    Kind kind = Kind::Conic;
    /// Cone spec string as accepted by parse_cone (conic tests only).
    std::string cone;
    EstimatorChoice::Kind estimator = EstimatorChoice::Kind::Full;

    static TestSpec conic(std::string name, std::string cone, EstimatorChoice::Kind estimator);
    static TestSpec power_enhancement() { return {"PE", Kind::PowerEnhancement, {}, {}}; }
    static TestSpec wald() { return {"Wald", Kind::Wald, {}, {}}; }
};

/// T1, T20, T20d, PE and Wald.
std::vector<TestSpec> standard_tests();

/// Named test ("T1", "T20", "T20d", "Tk", "Tkd", "PE", "Wald"). A trailing
/// "+" ("Tk+", "Tkd+") restricts the k-sparse cone to nonnegative weights.
TestSpec test_by_name(const std::string& name);

struct SimConfig
{
    Index n = 30;
    Index p = 100;
    double rho = 0.0;
    Index s = 0;
    double b = 0.0;
    std::vector<TestSpec> tests;
    double alpha = 0.05;
    std::size_t repetitions = 1000;
    std::uint64_t resamples = 1000;
    std::uint64_t master_seed = 0;
    unsigned workers = 1;
    SolverOptions solver;

    /// Throws DomainError describing the first invalid field.
    void validate() const;
};

struct TestResult
{
    std::string name;
    std::size_t rejections = 0;
    double reject_rate = 0.0;
    double mc_se = 0.0;
    /// Repetitions whose observed statistic did not exist.
    std::size_t failures = 0;
    /// Resample statistics set to zero across all repetitions.
    std::size_t resample_failures = 0;
    /// Repetitions where the Wald test fell back to an alpha coin.
    std::size_t fallbacks = 0;
};

struct SimResult
{
    SimConfig config;
    std::vector<TestResult> tests;
    std::size_t repetitions = 0;
    double wall_seconds = 0.0;
};

/// Upper triangular A with A'A = (1 - rho) I + rho 11'.
Matrix equicorr_factor(Index p, double rho);

/// First s entries b, the rest zero.
Vector mu_vector(Index p, Index s, double b);

/// X = 1 mu' + E A with E standard normal from child_stream(master_seed, rep).
DataMatrix generate_data(const SimConfig& cfg, std::uint64_t rep_index);

/// Signal strength grid: (30,1) 0.75, (30,20) 0.25, (250,1) 0.25, (250,20) 0.07.
double b_lookup(Index n, Index s);

SimResult run_experiment(const SimConfig& cfg);

void write_csv_header(std::ostream& out);
void write_csv_rows(std::ostream& out, const SimResult& result);
/// JSON array elements carrying the same fields as the CSV rows.
std::string to_json(const SimResult& result);

}  // namespace conic
