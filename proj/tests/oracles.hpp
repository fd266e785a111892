#pragma once

// Reference implementations used as test oracles. They are deliberately
// naive: bitmask enumeration, dense solves and grid searches.

#include "conic/estimators.hpp"
#include "conic/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

using conic::Index;
using conic::Matrix;
using conic::Vector;

inline Matrix random_normal(Index rows, Index cols, conic::StreamRng& rng)
{
    Matrix a(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            a(i, j) = rng.normal();
    return a;
}

inline Vector random_vector(Index p, conic::StreamRng& rng)
{
    return random_normal(p, 1, rng).col(0);
}

/// Well conditioned symmetric positive definite matrix.
inline Matrix random_spd(Index p, conic::StreamRng& rng)
{
    const Matrix a = random_normal(p, p, rng);
    return a.transpose() * a / double(p) + 0.2 * Matrix::Identity(p, p);
}

inline Matrix random_diagonal(Index p, conic::StreamRng& rng)
{
    Vector d(p);
    for (Index j = 0; j < p; ++j)
        d(j) = 0.25 + 2.0 * rng.uniform();
    return d.asDiagonal();
}

struct SubsetResult
{
    double objective = 1.0;
    std::vector<Index> support;
    Vector beta;
};

/// min 1 - 2m'b + b'Sb over supports of size <= k by bitmask enumeration.
/// With nonneg, only supports whose unconstrained solution is strictly
/// positive qualify (the optimum of the sign-constrained problem has that
/// form on its own support).
inline SubsetResult brute_force_subsets(const Vector& m, const Matrix& s, Index k,
                                        bool nonneg = false)
{
    const Index p = m.size();
    SubsetResult best;
    best.beta = Vector::Zero(p);
    for (unsigned mask = 1; mask < (1u << p); ++mask)
    {
        std::vector<Index> idx;
        for (Index j = 0; j < p; ++j)
            if (mask & (1u << j))
                idx.push_back(j);
        if (static_cast<Index>(idx.size()) > k)
            continue;
        const auto q = static_cast<Index>(idx.size());
        Matrix sub(q, q);
        Vector rhs(q);
        for (Index a = 0; a < q; ++a)
        {
            rhs(a) = m(idx[a]);
            for (Index b = 0; b < q; ++b)
                sub(a, b) = s(idx[a], idx[b]);
        }
        const Vector sol = sub.fullPivLu().solve(rhs);
        if (nonneg && (sol.array() <= 0.0).any())
            continue;
        const double obj = 1.0 - rhs.dot(sol);
        const bool better = obj < best.objective - 1e-12;
        const bool tie_lower = std::abs(obj - best.objective) <= 1e-12 && !best.support.empty() &&
                               idx < best.support;
        if (better || tie_lower)
        {
            best.objective = obj;
            best.support = idx;
            best.beta = Vector::Zero(p);
            for (Index a = 0; a < q; ++a)
                best.beta(idx[a]) = sol(a);
        }
    }
    return best;
}

/// max m'l over l'Sl = 1, l in C, by scanning angles in the plane.
inline double grid_statistic_2d(const Vector& m, const Matrix& s,
                                const std::function<bool(const Vector&)>& in_cone,
                                int steps = 200000)
{
    double best = 0.0;
    for (int i = 0; i < steps; ++i)
    {
        const double th = 2.0 * std::numbers::pi * i / steps;
        Vector l(2);
        l << std::cos(th), std::sin(th);
        if (!in_cone(l))
            continue;
        l /= std::sqrt(l.dot(s * l));
        best = std::max(best, m.dot(l));
    }
    return best;
}

/// CDF of F(1, d) through the Student t density, by Simpson's rule.
inline double f1_cdf_simpson(int d, double x, int intervals = 20000)
{
    const double c = std::exp(std::lgamma((d + 1) / 2.0) - std::lgamma(d / 2.0)) /
                     std::sqrt(d * std::numbers::pi);
    auto density = [&](double u) { return c * std::pow(1.0 + u * u / d, -(d + 1) / 2.0); };
    const double upper = std::sqrt(x);
    const double h = upper / intervals;
    double sum = density(0.0) + density(upper);
    for (int i = 1; i < intervals; ++i)
        sum += density(i * h) * (i % 2 ? 4.0 : 2.0);
    return 2.0 * (sum * h / 3.0);
}

inline double f1_quantile_bisect(int d, double q)
{
    double lo = 0.0;
    double hi = 1000.0;
    for (int it = 0; it < 200; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        (f1_cdf_simpson(d, mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracle
