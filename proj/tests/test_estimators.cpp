#include "conic/errors.hpp"
#include "conic/estimators.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace conic;
using Catch::Matchers::WithinAbs;

namespace {

DataMatrix two_by_two()
{
    Matrix x(2, 2);
    x << 1, 2, 3, 4;
    return DataMatrix(x);
}

}  // namespace

TEST_CASE("sample mean is the column average")
{
    CHECK(sample_mean(two_by_two()).m.isApprox(Vector::Map(std::vector<double>{2, 3}.data(), 2)));
    Matrix z = Matrix::Zero(2, 2);
    CHECK(sample_mean(DataMatrix(z)).m.isZero(0.0));
    Matrix c(3, 1);
    c << 1, 2, 6;
    CHECK(sample_mean(DataMatrix(c)).m(0) == 3.0);
}

TEST_CASE("sample covariance divides by n")
{
    const auto s = sample_covariance(two_by_two());
    CHECK(s.matrix.isApprox(Matrix::Ones(2, 2)));
    CHECK(s.structure == CovStructure::Full);

    Matrix same(3, 2);
    same << 1, 5, 1, 5, 1, 5;
    const auto zero = sample_covariance(DataMatrix(same));
    CHECK(zero.matrix.isZero(0.0));
    CHECK(zero.zero_variance == std::vector<Index>{0, 1});
}

TEST_CASE("sample covariance matches row accumulation")
{
    auto rng = child_stream(11, 0);
    const Matrix x = oracle::random_normal(5, 3, rng);
    const Vector m = x.colwise().mean().transpose();
    Matrix acc = Matrix::Zero(3, 3);
    for (Index i = 0; i < 5; ++i)
    {
        const Vector d = x.row(i).transpose() - m;
        acc += d * d.transpose();
    }
    acc /= 5.0;
    CHECK((sample_covariance(DataMatrix(x)).matrix - acc).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("diagonal and pooled estimators")
{
    const auto d = diagonal_covariance(two_by_two());
    CHECK(d.matrix.isApprox(Matrix::Identity(2, 2)));
    CHECK(d.structure == CovStructure::Diagonal);
    CHECK(pooled_covariance(two_by_two()).matrix.isApprox(Matrix::Identity(2, 2)));

    auto rng = child_stream(12, 0);
    const DataMatrix x(oracle::random_normal(6, 4, rng));
    const auto full = sample_covariance(x).matrix;
    const auto diag = diagonal_covariance(x).matrix;
    CHECK((diag.diagonal() - full.diagonal()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((diag - Matrix(diag.diagonal().asDiagonal())).isZero(0.0));

    const DataMatrix y(oracle::random_normal(5, 3, rng));
    const auto pooled = pooled_covariance(y);
    const double level = sample_covariance(y).matrix.trace() / 3.0;
    CHECK((pooled.matrix - level * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

    Matrix same(3, 2);
    same << 1, 5, 1, 5, 1, 5;
    CHECK(pooled_covariance(DataMatrix(same)).matrix.isZero(0.0));
    Matrix one_constant(3, 2);
    one_constant << 1, 5, 2, 5, 3, 5;
    CHECK(diagonal_covariance(DataMatrix(one_constant)).zero_variance == std::vector<Index>{1});
}

TEST_CASE("gram matrix equals covariance plus mean outer product")
{
    Matrix g(2, 2);
    g << 5, 7, 7, 10;
    CHECK(gram_matrix(two_by_two()).matrix.isApprox(g));
    CHECK(gram_matrix(DataMatrix(Matrix::Identity(2, 2))).matrix.isApprox(0.5 * Matrix::Identity(2, 2)));

    auto rng = child_stream(13, 0);
    for (int rep = 0; rep < 20; ++rep)
    {
        const DataMatrix x(oracle::random_normal(7, 5, rng) * 3.0);
        const Vector m = sample_mean(x).m;
        const Matrix diff = gram_matrix(x).matrix - m * m.transpose() - sample_covariance(x).matrix;
        CHECK(diff.cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("covariance is invariant to row order and reproducible")
{
    auto rng = child_stream(14, 0);
    const Matrix x = oracle::random_normal(8, 3, rng);
    const Matrix flipped = x.colwise().reverse();
    const auto a = sample_covariance(DataMatrix(x)).matrix;
    const auto b = sample_covariance(DataMatrix(flipped)).matrix;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(sample_covariance(DataMatrix(x)).matrix == a);
}

TEST_CASE("data matrix validation")
{
    CHECK_THROWS_AS(DataMatrix(Matrix::Zero(1, 3)), DegenerateInputError);
    CHECK_THROWS_AS(DataMatrix(Matrix::Zero(3, 0)), DegenerateInputError);
    Matrix bad = Matrix::Zero(2, 2);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(DataMatrix(bad), DegenerateInputError);
}

TEST_CASE("csv loading")
{
    std::istringstream ok("a,b\n1, 2\n3.5,-4e1\n");
    const auto x = DataMatrix::from_csv(ok, true);
    CHECK(x.rows() == 2);
    CHECK(x.values()(1, 1) == -40.0);

    std::istringstream bad("1,2\n3,x\n");
    try
    {
        DataMatrix::from_csv(bad, false);
        FAIL("expected a parse error");
    }
    catch (const ParseError& e)
    {
        CHECK(e.row() == 2);
        CHECK(e.column() == 2);
    }

    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(DataMatrix::from_csv(ragged, false), ParseError);
    CHECK_THROWS_AS(DataMatrix::from_csv(std::filesystem::path("/nonexistent/file.csv"), false),
                    ParseError);
}

TEST_CASE("validated covariance estimates")
{
    Matrix asym(2, 2);
    asym << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(CovEstimate::validated(asym, CovStructure::Full), DomainError);
    Matrix indefinite(2, 2);
    indefinite << 1, 2, 2, 1;
    CHECK_THROWS_AS(CovEstimate::validated(indefinite, CovStructure::Full), DomainError);
    Matrix offdiag(2, 2);
    offdiag << 1, 0.1, 0.1, 1;
    CHECK_THROWS_AS(CovEstimate::validated(offdiag, CovStructure::Diagonal), DomainError);
    CHECK_THROWS_AS(CovEstimate::validated(Matrix(Vector::LinSpaced(2, 1, 2).asDiagonal()),
                                           CovStructure::Pooled),
                    DomainError);
    const auto ok = CovEstimate::validated(Matrix::Identity(3, 3), CovStructure::Pooled);
    CHECK(ok.is_diagonal());
    CHECK(numerical_rank(Matrix::Ones(3, 3)) == 1);
    CHECK(numerical_rank(Matrix::Identity(4, 4)) == 4);
}
