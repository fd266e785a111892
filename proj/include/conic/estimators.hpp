#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace conic {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// n x p observation matrix, one row per observation.
///
/// Construction validates the shape (n >= 2, p >= 1) and that every entry is
/// finite, so downstream estimators never re-check.
class DataMatrix
{
public:
    explicit DataMatrix(Matrix values);

    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }
    const Matrix& values() const noexcept { return values_; }

    /// Parse comma-separated decimal floats. Malformed cells raise ParseError
    /// carrying 1-based row/column coordinates.
    static DataMatrix from_csv(std::istream& in, bool has_header);
    static DataMatrix from_csv(const std::filesystem::path& path, bool has_header);

private:
    Matrix values_;
};

struct MeanEstimate
{
    Vector m;

    Index size() const noexcept { return m.size(); }
};

enum class CovStructure { Full, Diagonal, Pooled };

const char* to_string(CovStructure structure) noexcept;

/// Covariance estimate S together with its structure tag.
struct CovEstimate
{
    Matrix matrix;
    CovStructure structure = CovStructure::Full;
    double rank_tolerance = 1e-10;
    /// Columns whose estimated variance is exactly zero.
    std::vector<Index> zero_variance;

    Index size() const noexcept { return matrix.rows(); }
    bool is_diagonal() const noexcept { return structure != CovStructure::Full; }

    /// Wrap a user supplied matrix, checking symmetry (1e-12 relative) and
    /// positive semidefiniteness (smallest eigenvalue >= -tol * largest).
    /// Diagonal and Pooled structures must have exactly zero off-diagonals.
    static CovEstimate validated(Matrix matrix, CovStructure structure,
                                 double rank_tolerance = 1e-10);
};

struct GramMatrix
{
    Matrix matrix;
};

MeanEstimate sample_mean(const DataMatrix& x);

/// (1/n) (X - 1 m')' (X - 1 m'). The divisor is n.
CovEstimate sample_covariance(const DataMatrix& x);

CovEstimate diagonal_covariance(const DataMatrix& x);

/// (tr(S)/p) I for the sample covariance S.
CovEstimate pooled_covariance(const DataMatrix& x);

/// X'X / n.
GramMatrix gram_matrix(const DataMatrix& x);

/// Numerical rank of a symmetric PSD matrix: eigenvalues above
/// tol * largest eigenvalue.
Index numerical_rank(const Matrix& s, double tol = 1e-10);

}  // namespace conic
