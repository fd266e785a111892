#include "conic/errors.hpp"
#include "conic/solvers.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>

using namespace conic;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v)
        out(i++) = x;
    return out;
}

std::vector<Index> support(const Vector& b)
{
    std::vector<Index> out;
    for (Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0)
            out.push_back(j);
    return out;
}

/// Euclidean projection onto {||b||_1 <= r} by sorting.
Vector project_l1(const Vector& v, double r)
{
    if (v.lpNorm<1>() <= r)
        return v;
    std::vector<double> u(v.size());
    for (Index j = 0; j < v.size(); ++j)
        u[j] = std::abs(v(j));
    std::sort(u.rbegin(), u.rend());
    double cum = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
    {
        cum += u[i];
        const double t = (cum - r) / double(i + 1);
        if (u[i] > t)
            theta = t;
    }
    Vector out(v.size());
    for (Index j = 0; j < v.size(); ++j)
        out(j) = std::copysign(std::max(std::abs(v(j)) - theta, 0.0), v(j));
    return out;
}

/// Projected gradient descent for the l1-ball constrained problem.
Vector l1_ball_oracle(const Vector& m, const Matrix& s, double r)
{
    const double step = 0.5 / Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().maxCoeff();
    Vector b = Vector::Zero(m.size());
    for (int it = 0; it < 200000; ++it)
    {
        const Vector next = project_l1(b - step * 2.0 * (s * b - m), r);
        if ((next - b).norm() < 1e-15)
            break;
        b = next;
    }
    return b;
}

}  // namespace

TEST_CASE("exhaustive best subset on the worked example")
{
    const auto out = bss_exhaustive(vec({3, -4, 1}), Matrix::Identity(3, 3), 2);
    CHECK(out.beta_hat.isApprox(vec({3, -4, 0})));
    CHECK(out.objective == Catch::Approx(-24.0));
    CHECK(out.certificate == Certificate::ExactExhaustive);

    const auto zero = bss_exhaustive(Vector::Zero(3), Matrix::Identity(3, 3), 2);
    CHECK(zero.beta_hat.isZero(0.0));
    CHECK(zero.objective == 1.0);
}

TEST_CASE("exhaustive best subset matches bitmask enumeration")
{
    auto rng = child_stream(31, 0);
    for (int rep = 0; rep < 60; ++rep)
    {
        const Index p = 10;
        const Vector m = oracle::random_vector(p, rng);
        const Matrix s = oracle::random_spd(p, rng);
        const auto truth = oracle::brute_force_subsets(m, s, 3);
        const auto got = bss_exhaustive(m, s, 3);
        REQUIRE(support(got.beta_hat) == truth.support);
        CHECK(std::abs(got.objective - truth.objective) <= 1e-12);
        CHECK(std::abs(got.objective - quadratic_objective(m, s, got.beta_hat)) <= 1e-10);
    }
    CHECK(support_count(10, 3) == 175);
}

TEST_CASE("exhaustive solver is independent of the worker count")
{
    auto rng = child_stream(32, 0);
    const Vector m = oracle::random_vector(12, rng);
    const Matrix s = oracle::random_spd(12, rng);
    SolverOptions one, four;
    four.workers = 4;
    const auto a = bss_exhaustive(m, s, 4, one);
    const auto b = bss_exhaustive(m, s, 4, four);
    CHECK(a.beta_hat == b.beta_hat);
    CHECK(a.objective == b.objective);
}

TEST_CASE("exhaustive solver breaks exact ties toward the lower support")
{
    const auto out = bss_exhaustive(vec({2, -2, 1}), Matrix::Identity(3, 3), 1);
    CHECK(support(out.beta_hat) == std::vector<Index>{0});
    CHECK(out.tied_supports == 2);
}

TEST_CASE("exhaustive solver budget and singular supports")
{
    SolverOptions tight;
    tight.exhaustive_limit = 10;
    CHECK_THROWS_AS(bss_exhaustive(Vector::Ones(6), Matrix::Identity(6, 6), 3, tight),
                    BudgetExceededError);

    Matrix s = Matrix::Identity(3, 3);
    s(2, 2) = 0.0;
    const auto out = bss_exhaustive(vec({1, 1, 1}), s, 2);
    CHECK(out.skipped_supports > 0);
    CHECK(out.beta_hat(2) == 0.0);

    try
    {
        bss_exhaustive(vec({1, 0}), Matrix::Zero(2, 2), 1);
        FAIL("expected an existence error");
    }
    catch (const ExistenceError& e)
    {
        CHECK_FALSE(e.report().exists);
    }
}

TEST_CASE("sign constrained best subset matches enumeration")
{
    auto rng = child_stream(33, 0);
    for (int rep = 0; rep < 60; ++rep)
    {
        const Index p = 8;
        const Vector m = oracle::random_vector(p, rng);
        const Matrix s = oracle::random_spd(p, rng);
        const auto truth = oracle::brute_force_subsets(m, s, 3, true);
        const auto got = bss_nonneg_exhaustive(m, s, 3);
        CHECK(std::abs(got.objective - truth.objective) <= 1e-10);
        CHECK((got.beta_hat.array() >= 0.0).all());
        const auto heur = bss_nonneg_heuristic(m, s, 3);
        CHECK(heur.objective >= truth.objective - 1e-12);
        CHECK((heur.beta_hat.array() >= 0.0).all());
    }
}

TEST_CASE("heuristic best subset")
{
    const auto ex = bss_heuristic(vec({3, -4, 1}), Matrix::Identity(3, 3), 2);
    CHECK(ex.beta_hat.isApprox(vec({3, -4, 0})));
    CHECK(ex.certificate == Certificate::HeuristicLocalOpt);

    auto rng = child_stream(34, 0);
    const Vector m = oracle::random_vector(6, rng);
    const Matrix s = oracle::random_spd(6, rng);
    const auto full = bss_heuristic(m, s, 6);
    CHECK((full.beta_hat - s.ldlt().solve(m)).norm() < 1e-10);

    SolverOptions a, b;
    a.seed = b.seed = 9;
    b.workers = 3;
    const Vector m2 = oracle::random_vector(40, rng);
    const Matrix s2 = oracle::random_spd(40, rng);
    const auto r1 = bss_heuristic(m2, s2, 5, a);
    const auto r2 = bss_heuristic(m2, s2, 5, a);
    const auto r3 = bss_heuristic(m2, s2, 5, b);
    CHECK(r1.beta_hat == r2.beta_hat);
    CHECK(r1.beta_hat == r3.beta_hat);

    SolverOptions none;
    none.restarts = 0;
    CHECK(r1.objective <= bss_heuristic(m2, s2, 5, none).objective + 1e-14);
}

TEST_CASE("nonnegative quadratic program")
{
    auto rng = child_stream(35, 0);
    for (int rep = 0; rep < 50; ++rep)
    {
        const Index p = 7;
        const Vector m = oracle::random_vector(p, rng);
        const Matrix s = oracle::random_spd(p, rng);
        const auto truth = oracle::brute_force_subsets(m, s, p, true);
        const auto got = nonneg_qp(m, s);
        CHECK(std::abs(got.objective - truth.objective) <= 1e-10);
        CHECK((got.beta_hat - truth.beta).norm() <= 1e-8);
    }

    Matrix ones = Matrix::Ones(2, 2);
    const auto bounded = nonneg_qp(vec({1.4, -0.2}), ones);
    CHECK(bounded.beta_hat.isApprox(vec({1.4, 0})));

    Matrix half = Matrix::Zero(2, 2);
    half(0, 0) = 1.0;
    try
    {
        nonneg_qp(vec({0, 1}), half);
        FAIL("expected an existence error");
    }
    catch (const ExistenceError& e)
    {
        REQUIRE(e.report().witness);
        const Vector w = *e.report().witness;
        CHECK(std::abs(w.dot(vec({0, 1})) - 1.0) < 1e-12);
        CHECK(w.dot(half * w) < 1e-12);
        CHECK((w.array() >= 0.0).all());
    }
}

TEST_CASE("l1 constrained least squares")
{
    const auto two_d = lasso_constrained(vec({3, 4}), Matrix::Identity(2, 2), 1.0);
    CHECK((two_d.beta_hat - vec({0, 1})).norm() < 1e-9);
    CHECK(two_d.objective == Catch::Approx(-6.0).margin(1e-9));

    auto rng = child_stream(36, 0);
    const Vector m = oracle::random_vector(5, rng);
    const Matrix s = oracle::random_spd(5, rng);
    const Vector free = s.ldlt().solve(m);
    CHECK((lasso_constrained(m, s, free.lpNorm<1>() * 1.01).beta_hat - free).norm() < 1e-12);
    CHECK(lasso_constrained(Vector::Zero(5), s, 1.0).beta_hat.isZero(0.0));

    double previous = 1.0;
    for (double r : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0})
    {
        const auto out = lasso_constrained(m, s, r);
        CHECK(out.beta_hat.lpNorm<1>() <= r * (1 + 1e-10));
        CHECK(out.objective <= previous + 1e-12);
        previous = out.objective;
        const Vector ref = l1_ball_oracle(m, s, r);
        CHECK(out.objective <= quadratic_objective(m, s, ref) + 1e-9);
        CHECK((out.beta_hat - ref).norm() < 1e-6);
    }

    CHECK_THROWS_AS(lasso_constrained(m, s, 0.0), DomainError);
}

TEST_CASE("l1 constrained least squares with a constant regressand")
{
    // Gram matrix of a design with a constant column: that column's
    // regression on the constant is a perfect fit.
    auto rng = child_stream(37, 0);
    Matrix x = oracle::random_normal(20, 4, rng);
    x.col(0).setOnes();
    const Matrix g = x.transpose() * x / 20.0;
    const Vector m = x.colwise().mean().transpose();
    const auto out = lasso_constrained(m, g, 0.5);
    const Vector ref = l1_ball_oracle(m, g, 0.5);
    CHECK(std::abs(out.objective - quadratic_objective(m, g, ref)) < 1e-9);
}

TEST_CASE("lasso cone limits in two dimensions")
{
    const Matrix s = Matrix::Identity(2, 2);
    const Vector m = vec({3, 4});
    auto t_of = [&](const SolveOutcome& o) {
        return m.dot(o.beta_hat) / std::sqrt(o.beta_hat.dot(s * o.beta_hat));
    };
    CHECK(t_of(lasso_cone_solve(m, s, 1.0)) == Catch::Approx(4.0).margin(1e-6));
    CHECK(t_of(lasso_cone_solve(m, s, std::sqrt(2.0))) == Catch::Approx(5.0).margin(1e-6));
    CHECK(t_of(lasso_cone_solve(m, s, 3.0)) == Catch::Approx(5.0).margin(1e-6));
    CHECK(lasso_cone_solve(Vector::Zero(2), s, 1.0).beta_hat.isZero(0.0));
    CHECK(lasso_cone_solve(m, s, 1.0).certificate == Certificate::FixedPoint);
}

TEST_CASE("lasso cone against a grid search")
{
    auto rng = child_stream(38, 0);
    for (int rep = 0; rep < 20; ++rep)
    {
        const Vector m = oracle::random_vector(2, rng);
        const Matrix s = rep % 2 ? Matrix(oracle::random_spd(2, rng)) : Matrix(Matrix::Identity(2, 2));
        const double t = 1.0 + 0.8 * rng.uniform();
        const double grid = oracle::grid_statistic_2d(m, s, [&](const Vector& l) {
            return l.lpNorm<1>() <= t * std::sqrt(l.dot(s * l));
        });
        const auto out = lasso_cone_solve(m, s, t);
        const double got = out.beta_hat.isZero(0.0)
                               ? 0.0
                               : m.dot(out.beta_hat) / std::sqrt(out.beta_hat.dot(s * out.beta_hat));
        // The fixed point is a heuristic: it may stop short of the optimum
        // for general S but never passes it.
        CHECK(got <= grid + 1e-4);
        if (rep % 2 == 0)
            CHECK(got == Catch::Approx(grid).margin(1e-4));
    }
}

TEST_CASE("regression form")
{
    // Orthonormal columns scaled so the Gram matrix is the identity.
    Matrix q = Eigen::HouseholderQR<Matrix>(Matrix::Random(8, 3)).householderQ() *
               Matrix::Identity(8, 3);
    const DataMatrix x(q * std::sqrt(8.0));
    const auto out = regression_solve(x, Cone::full_space(3));
    CHECK((out.beta_hat - sample_mean(x).m).norm() < 1e-10);

    const DataMatrix ones(Matrix::Ones(4, 1));
    const auto fit = regression_solve(ones, Cone::full_space(1));
    CHECK(fit.beta_hat(0) == Catch::Approx(1.0));
    CHECK(std::abs(fit.objective) < 1e-12);
}

TEST_CASE("full space solve reports a null space witness")
{
    Matrix s(2, 2);
    s << 1, 1, 1, 1;
    try
    {
        solve_over_cone(vec({1.4, -0.2}), s, Cone::full_space(2));
        FAIL("expected an existence error");
    }
    catch (const ExistenceError& e)
    {
        REQUIRE(e.report().witness);
        const Vector w = *e.report().witness;
        CHECK(w.dot(vec({1.4, -0.2})) == Catch::Approx(1.0));
        CHECK(w.dot(s * w) < 1e-12);
        CHECK(std::abs(w(0) + w(1)) < 1e-12);
    }
}
