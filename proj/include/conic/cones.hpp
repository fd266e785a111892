#pragma once

#include "conic/estimators.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace conic {

class Cone;

namespace cone_kind {

/// All of R^p.
struct FullSpace
{
};
/// {v : v >= 0}.
struct NonNegOrthant
{
};
/// The j-th coordinate axis (0-based j).
struct Coordinate
{
    Index j;
};
/// {v : ||v||_0 <= k}.
struct KSparse
{
    Index k;
};
/// Cone generated by the ellipsoid points with ||v||_1 <= t.
struct LassoCone
{
    double t;
};
/// Union of the rays through a finite list of nonzero directions.
struct FiniteDirections
{
    std::vector<Vector> directions;
};
struct Intersection
{
    std::vector<Cone> parts;
};

}  // namespace cone_kind

/// Parameter subspace toward which a conic statistic directs power.
///
/// Cones are immutable values; every constructor checks the kind-specific
/// invariants (1 <= k <= p, t > 0, nonzero directions of length p, ...).
class Cone
{
public:
    using Kind = std::variant<cone_kind::FullSpace, cone_kind::NonNegOrthant,
                              cone_kind::Coordinate, cone_kind::KSparse,
                              cone_kind::LassoCone, cone_kind::FiniteDirections,
                              cone_kind::Intersection>;

    static Cone full_space(Index p);
    static Cone nonneg_orthant(Index p);
    static Cone coordinate(Index p, Index j);
    static Cone k_sparse(Index p, Index k);
    static Cone lasso(Index p, double t);
    static Cone directions(std::vector<Vector> directions);
    static Cone intersection(std::vector<Cone> parts);

    Index dim() const noexcept { return dim_; }
    const Kind& kind() const noexcept { return kind_; }

    template <class T>
    const T* as() const noexcept
    {
        return std::get_if<T>(&kind_);
    }

    /// Mini-language form (`full`, `ksparse:3`, ...). Coordinates are
    /// printed 1-based. Finite direction cones print as `dirs:<count>`.
    std::string describe() const;

private:
    Cone(Kind kind, Index dim) : kind_(std::move(kind)), dim_(dim) {}

    Kind kind_;
    Index dim_;
};

/// Normal form shared by the intersections of full space, the orthant,
/// coordinate axes and k-sparse sets: vectors with at most `k` nonzeros,
/// optionally restricted to one coordinate and to nonnegative entries.
struct SignedSparsity
{
    bool nonneg = false;
    std::optional<Index> coordinate;
    Index k = 0;
    /// True when the cone is {0} (two different coordinate axes intersected).
    bool trivial = false;
};

/// Normal form of `c`, or nullopt if `c` involves lasso or direction cones.
std::optional<SignedSparsity> signed_sparsity(const Cone& c);

/// Membership test. `ellipsoid` is needed only when the cone contains a
/// lasso cone, whose definition refers to the ellipsoid v'Sv = 1.
bool contains(const Cone& c, const Vector& v, const CovEstimate* ellipsoid = nullptr);

/// Membership in the polar cone {u : u'v <= 0 for all v in C}.
bool polar_contains(const Cone& c, const Vector& v);

/// True if the cone is closed under multiplication by positive diagonal
/// matrices (a "sign cone").
bool is_scone(const Cone& c);

/// Reads direction vectors for `dirs:FILE`.
using DirectionLoader = std::function<std::vector<Vector>(const std::string& path)>;

/// Parse the CLI mini-language: full, nonneg, coord:J (1-based), ksparse:K,
/// ksparse+:K, lasso:T, dirs:FILE. Errors name the offending token.
Cone parse_cone(std::string_view spec, Index p, const DirectionLoader& loader = {});

/// Default loader for dirs:FILE, one direction per CSV row.
std::vector<Vector> load_directions_csv(const std::string& path);

}  // namespace conic
