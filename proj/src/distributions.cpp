#include "conic/distributions.hpp"

#include "conic/errors.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>

namespace conic {

namespace {

boost::math::fisher_f make(int d1, int d2)
{
    if (d1 < 1 || d2 < 1)
        throw DomainError("F distribution needs positive degrees of freedom");
    return boost::math::fisher_f(static_cast<double>(d1), static_cast<double>(d2));
}

}  // namespace

double f_cdf(int d1, int d2, double x)
{
    const auto dist = make(d1, d2);
    if (std::isnan(x))
        throw DomainError("F CDF evaluated at NaN");
    if (x <= 0.0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;
    return boost::math::cdf(dist, x);
}

double f_quantile(int d1, int d2, double q)
{
    const auto dist = make(d1, d2);
    if (!(q > 0.0 && q < 1.0))
        throw DomainError("F quantile level must lie in (0, 1)");
    // F(d, d) is symmetric under x -> 1/x.
    if (d1 == d2 && q == 0.5)
        return 1.0;
    try
    {
        return boost::math::quantile(dist, q);
    }
    catch (const boost::math::evaluation_error&)
    {
        // Newton iteration inside the inverse incomplete beta can stall;
        // bracket on the CDF instead.
        double hi = 1.0;
        while (boost::math::cdf(dist, hi) < q)
            hi *= 2.0;
        double lo = hi / 2.0;
        while (lo > 0.0 && boost::math::cdf(dist, lo) > q)
            lo /= 2.0;
        std::uintmax_t iterations = 200;
        const auto root = boost::math::tools::toms748_solve(
            [&](double x) { return boost::math::cdf(dist, x) - q; }, lo, hi,
            boost::math::tools::eps_tolerance<double>(52), iterations);
        return 0.5 * (root.first + root.second);
    }
}

}  // namespace conic
