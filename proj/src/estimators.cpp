#include "conic/estimators.hpp"

#include "conic/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace conic {

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values))
{
    if (values_.cols() < 1)
        throw DegenerateInputError("data matrix needs at least one column");
    if (values_.rows() < 2)
        throw DegenerateInputError("data matrix needs at least two observations (n >= 2)");
    if (!values_.allFinite())
        throw DegenerateInputError("data matrix contains non-finite entries");
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_cell(std::string_view cell, long row, long col)
{
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+')
        cell.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
        !std::isfinite(value))
    {
        std::ostringstream msg;
        msg << "malformed cell '" << cell << "' at row " << row << ", column " << col;
        throw ParseError(msg.str(), row, col);
    }
    return value;
}

}  // namespace

DataMatrix DataMatrix::from_csv(std::istream& in, bool has_header)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (has_header && line_no == 1)
            continue;
        if (trim(line).empty())
            continue;
        std::vector<double> row;
        std::string_view rest(line);
        long col = 0;
        while (true)
        {
            ++col;
            auto comma = rest.find(',');
            row.push_back(parse_cell(rest.substr(0, comma), line_no, col));
            if (comma == std::string_view::npos)
                break;
            rest.remove_prefix(comma + 1);
        }
        if (width == 0)
            width = row.size();
        else if (row.size() != width)
        {
            std::ostringstream msg;
            msg << "row " << line_no << " has " << row.size() << " columns, expected " << width;
            throw ParseError(msg.str(), line_no, static_cast<long>(row.size()));
        }
        rows.push_back(std::move(row));
    }
    Matrix values(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return DataMatrix(std::move(values));
}

DataMatrix DataMatrix::from_csv(const std::filesystem::path& path, bool has_header)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open data file " + path.string());
    return from_csv(in, has_header);
}

const char* to_string(CovStructure structure) noexcept
{
    switch (structure)
    {
    case CovStructure::Full: return "full";
    case CovStructure::Diagonal: return "diagonal";
    case CovStructure::Pooled: return "pooled";
    }
    return "unknown";
}

CovEstimate CovEstimate::validated(Matrix matrix, CovStructure structure, double rank_tolerance)
{
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
        throw DomainError("covariance estimate must be a non-empty square matrix");
    if (!matrix.allFinite())
        throw DomainError("covariance estimate has non-finite entries");
    if (rank_tolerance < 0)
        throw DomainError("rank tolerance must be nonnegative");
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw DomainError("covariance estimate is not symmetric");
    if (structure != CovStructure::Full)
    {
        Matrix off = matrix;
        off.diagonal().setZero();
        if (!off.isZero(0.0))
            throw DomainError("diagonal covariance estimate has nonzero off-diagonal entries");
        if (structure == CovStructure::Pooled &&
            (matrix.diagonal().array() != matrix(0, 0)).any())
            throw DomainError("pooled covariance estimate must be a scalar matrix");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(matrix, Eigen::EigenvaluesOnly);
    const double largest = eig.eigenvalues().maxCoeff();
    const double smallest = eig.eigenvalues().minCoeff();
    if (smallest < -rank_tolerance * std::max(largest, 0.0) - 1e-300)
        throw DomainError("covariance estimate is not positive semidefinite");

    CovEstimate out{std::move(matrix), structure, rank_tolerance, {}};
    for (Index j = 0; j < out.matrix.rows(); ++j)
        if (out.matrix(j, j) == 0.0)
            out.zero_variance.push_back(j);
    return out;
}

MeanEstimate sample_mean(const DataMatrix& x)
{
    return {x.values().colwise().mean().transpose()};
}

namespace {

std::vector<Index> zero_diagonal(const Matrix& s)
{
    std::vector<Index> out;
    for (Index j = 0; j < s.rows(); ++j)
        if (s(j, j) == 0.0)
            out.push_back(j);
    return out;
}

}  // namespace

CovEstimate sample_covariance(const DataMatrix& x)
{
    const auto& v = x.values();
    const Vector m = v.colwise().mean().transpose();
    const Matrix centered = v.rowwise() - m.transpose();
    Matrix s = (centered.transpose() * centered) / static_cast<double>(v.rows());
    // The product is symmetric in exact arithmetic; force it bitwise.
    s = s.triangularView<Eigen::Upper>();
    s.triangularView<Eigen::StrictlyLower>() = s.transpose();
    auto zeros = zero_diagonal(s);
    return {std::move(s), CovStructure::Full, 1e-10, std::move(zeros)};
}

CovEstimate diagonal_covariance(const DataMatrix& x)
{
    const auto& v = x.values();
    const Vector m = v.colwise().mean().transpose();
    const Matrix centered = v.rowwise() - m.transpose();
    Vector var = centered.colwise().squaredNorm().transpose() / static_cast<double>(v.rows());
    Matrix s = var.asDiagonal();
    auto zeros = zero_diagonal(s);
    return {std::move(s), CovStructure::Diagonal, 1e-10, std::move(zeros)};
}

CovEstimate pooled_covariance(const DataMatrix& x)
{
    const auto& v = x.values();
    const Vector m = v.colwise().mean().transpose();
    const Matrix centered = v.rowwise() - m.transpose();
    const double trace = centered.squaredNorm() / static_cast<double>(v.rows());
    const Index p = v.cols();
    Matrix s = Matrix::Identity(p, p) * (trace / static_cast<double>(p));
    auto zeros = zero_diagonal(s);
    return {std::move(s), CovStructure::Pooled, 1e-10, std::move(zeros)};
}

GramMatrix gram_matrix(const DataMatrix& x)
{
    const auto& v = x.values();
    Matrix g = (v.transpose() * v) / static_cast<double>(v.rows());
    g = g.triangularView<Eigen::Upper>();
    g.triangularView<Eigen::StrictlyLower>() = g.transpose();
    return {std::move(g)};
}

Index numerical_rank(const Matrix& s, double tol)
{
    if (s.size() == 0)
        return 0;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    const double largest = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (largest == 0.0)
        return 0;
    return (eig.eigenvalues().array() > tol * largest).count();
}

}  // namespace conic
