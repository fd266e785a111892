#pragma once

#include "conic/errors.hpp"
#include "conic/estimators.hpp"

#include <optional>
#include <string>
#include <utility>

namespace conic {

/// Outcome of the restricted eigenvalue check
///   min { l'Sl : l in C, m'l = 1 } > 0.
struct ExistenceReport
{
    bool exists = true;
    /// Direction l in C with l'Sl ~ 0 and m'l = 1, when one was found.
    std::optional<Vector> witness;
    /// (rank of S, k) for k-sparse cones.
    std::optional<std::pair<Index, Index>> rank_check;
};

/// The statistic is unbounded (infinite) for the given data and cone.
class ExistenceError : public Error
{
public:
    ExistenceError(const std::string& what, ExistenceReport report)
        : Error(what), report_(std::move(report))
    {
    }

    const ExistenceReport& report() const noexcept { return report_; }

private:
    ExistenceReport report_;
};

}  // namespace conic
