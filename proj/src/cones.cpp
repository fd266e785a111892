#include "conic/cones.hpp"

#include "conic/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace conic {

using namespace cone_kind;

namespace {

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dim(Index p)
{
    if (p < 1)
        throw DomainError("cone dimension must be positive");
}

}  // namespace

Cone Cone::full_space(Index p)
{
    require_dim(p);
    return Cone(FullSpace{}, p);
}

Cone Cone::nonneg_orthant(Index p)
{
    require_dim(p);
    return Cone(NonNegOrthant{}, p);
}

Cone Cone::coordinate(Index p, Index j)
{
    require_dim(p);
    if (j < 0 || j >= p)
        throw DomainError("coordinate index out of range");
    return Cone(Coordinate{j}, p);
}

Cone Cone::k_sparse(Index p, Index k)
{
    require_dim(p);
    if (k < 1 || k > p)
        throw DomainError("k-sparse cone requires 1 <= k <= p");
    return Cone(KSparse{k}, p);
}

Cone Cone::lasso(Index p, double t)
{
    require_dim(p);
    if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError("lasso cone requires a finite radius t > 0");
    return Cone(LassoCone{t}, p);
}

Cone Cone::directions(std::vector<Vector> directions)
{
    if (directions.empty())
        throw DomainError("direction cone needs at least one direction");
    const Index p = directions.front().size();
    require_dim(p);
    for (const auto& d : directions)
    {
        if (d.size() != p)
            throw DomainError("direction vectors must share one length");
        if (!d.allFinite() || d.isZero(0.0))
            throw DomainError("direction vectors must be finite and nonzero");
    }
    return Cone(FiniteDirections{std::move(directions)}, p);
}

Cone Cone::intersection(std::vector<Cone> parts)
{
    if (parts.empty())
        throw DomainError("intersection needs at least one cone");
    const Index p = parts.front().dim();
    for (const auto& c : parts)
        if (c.dim() != p)
            throw DomainError("intersected cones must share one dimension");
    return Cone(Intersection{std::move(parts)}, p);
}

std::string Cone::describe() const
{
    return std::visit(
        overloaded{
            [](const FullSpace&) -> std::string { return "full"; },
            [](const NonNegOrthant&) -> std::string { return "nonneg"; },
            [](const Coordinate& c) { return "coord:" + std::to_string(c.j + 1); },
            [](const KSparse& c) { return "ksparse:" + std::to_string(c.k); },
            [](const LassoCone& c) {
                std::ostringstream s;
                s.precision(17);
                s << "lasso:" << c.t;
                return s.str();
            },
            [](const FiniteDirections& c) {
                return "dirs:" + std::to_string(c.directions.size());
            },
            [](const Intersection& c) {
                if (c.parts.size() == 2)
                {
                    const KSparse* ks = c.parts[0].as<KSparse>();
                    if (ks && c.parts[1].as<NonNegOrthant>())
                        return "ksparse+:" + std::to_string(ks->k);
                }
                std::string out = "intersection(";
                for (std::size_t i = 0; i < c.parts.size(); ++i)
                    out += (i ? "," : "") + c.parts[i].describe();
                return out + ")";
            },
        },
        kind_);
}

std::optional<SignedSparsity> signed_sparsity(const Cone& c)
{
    const Index p = c.dim();
    return std::visit(
        overloaded{
            [p](const FullSpace&) -> std::optional<SignedSparsity> {
                return SignedSparsity{false, std::nullopt, p, false};
            },
            [p](const NonNegOrthant&) -> std::optional<SignedSparsity> {
                return SignedSparsity{true, std::nullopt, p, false};
            },
            [](const Coordinate& k) -> std::optional<SignedSparsity> {
                return SignedSparsity{false, k.j, 1, false};
            },
            [](const KSparse& k) -> std::optional<SignedSparsity> {
                return SignedSparsity{false, std::nullopt, k.k, false};
            },
            [](const LassoCone&) -> std::optional<SignedSparsity> { return std::nullopt; },
            [](const FiniteDirections&) -> std::optional<SignedSparsity> {
                return std::nullopt;
            },
            [p](const Intersection& k) -> std::optional<SignedSparsity> {
                SignedSparsity out{false, std::nullopt, p, false};
                for (const auto& part : k.parts)
                {
                    auto sub = signed_sparsity(part);
                    if (!sub)
                        return std::nullopt;
                    out.nonneg = out.nonneg || sub->nonneg;
                    out.trivial = out.trivial || sub->trivial;
                    if (sub->coordinate)
                    {
                        if (out.coordinate && *out.coordinate != *sub->coordinate)
                            out.trivial = true;
                        out.coordinate = sub->coordinate;
                    }
                    out.k = std::min(out.k, sub->k);
                }
                if (out.coordinate)
                    out.k = std::min<Index>(out.k, 1);
                return out;
            },
        },
        c.kind());
}

namespace {

constexpr double kNormSlack = 1e-12;

bool on_ray(const Vector& v, const Vector& d)
{
    const double vd = v.dot(d);
    if (vd <= 0.0)
        return false;
    const Vector residual = v - (vd / d.squaredNorm()) * d;
    return residual.norm() <= kNormSlack * std::max(1.0, v.norm());
}

}  // namespace

bool contains(const Cone& c, const Vector& v, const CovEstimate* ellipsoid)
{
    if (v.size() != c.dim())
        throw DomainError("vector length does not match cone dimension");
    return std::visit(
        overloaded{
            [](const FullSpace&) { return true; },
            [&](const NonNegOrthant&) { return (v.array() >= 0.0).all(); },
            [&](const Coordinate& k) {
                for (Index i = 0; i < v.size(); ++i)
                    if (i != k.j && v(i) != 0.0)
                        return false;
                return true;
            },
            [&](const KSparse& k) { return (v.array() != 0.0).count() <= k.k; },
            [&](const LassoCone& k) {
                if (!ellipsoid)
                    throw MissingParameterError("lasso cone membership needs the ellipsoid matrix S");
                if (ellipsoid->size() != v.size())
                    throw DomainError("ellipsoid dimension does not match vector length");
                if (v.isZero(0.0))
                    return true;
                const double q = v.dot(ellipsoid->matrix * v);
                if (q <= 0.0)
                    return false;
                return v.lpNorm<1>() <= k.t * std::sqrt(q) + kNormSlack;
            },
            [&](const FiniteDirections& k) {
                if (v.isZero(0.0))
                    return true;
                for (const auto& d : k.directions)
                    if (on_ray(v, d))
                        return true;
                return false;
            },
            [&](const Intersection& k) {
                for (const auto& part : k.parts)
                    if (!contains(part, v, ellipsoid))
                        return false;
                return true;
            },
        },
        c.kind());
}

namespace {

/// Directions of a finite cone that survive intersection with the other parts.
std::optional<std::vector<Vector>> surviving_directions(const Intersection& k)
{
    std::optional<std::vector<Vector>> dirs;
    for (const auto& part : k.parts)
        if (auto fd = part.as<FiniteDirections>())
        {
            dirs = std::vector<Vector>{};
            for (const auto& d : fd->directions)
            {
                bool keep = true;
                for (const auto& other : k.parts)
                    keep = keep && contains(other, d);
                if (keep)
                    dirs->push_back(d);
            }
            break;
        }
    return dirs;
}

bool polar_of_directions(const std::vector<Vector>& dirs, const Vector& v)
{
    for (const auto& d : dirs)
        if (v.dot(d) > kNormSlack)
            return false;
    return true;
}

}  // namespace

bool polar_contains(const Cone& c, const Vector& v)
{
    if (v.size() != c.dim())
        throw DomainError("vector length does not match cone dimension");
    if (c.as<LassoCone>())
        throw UnsupportedOperationError("polar of the lasso cone is not supported");
    if (auto fd = c.as<FiniteDirections>())
        return polar_of_directions(fd->directions, v);
    if (auto inter = c.as<Intersection>())
    {
        for (const auto& part : inter->parts)
            if (part.as<LassoCone>())
                throw UnsupportedOperationError("polar of the lasso cone is not supported");
        if (auto dirs = surviving_directions(*inter))
            return polar_of_directions(*dirs, v);
    }
    const auto form = signed_sparsity(c);
    if (!form)
        throw UnsupportedOperationError("polar not supported for cone " + c.describe());
    if (form->trivial)
        return true;
    if (form->coordinate)
    {
        const double vj = v(*form->coordinate);
        return form->nonneg ? vj <= 0.0 : vj == 0.0;
    }
    // Every remaining form contains all (nonnegative) coordinate axes.
    return form->nonneg ? (v.array() <= 0.0).all() : v.isZero(0.0);
}

bool is_scone(const Cone& c)
{
    return std::visit(
        overloaded{
            [](const LassoCone&) { return false; },
            [](const FiniteDirections& k) {
                for (const auto& d : k.directions)
                    if ((d.array() != 0.0).count() != 1)
                        return false;
                return true;
            },
            [](const Intersection& k) {
                for (const auto& part : k.parts)
                    if (!is_scone(part))
                        return false;
                return true;
            },
            [](const auto&) { return true; },
        },
        c.kind());
}

namespace {

template <class T>
T parse_number(std::string_view text, std::string_view token)
{
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("invalid number in cone token '" + std::string(token) + "'");
    return value;
}

}  // namespace

Cone parse_cone(std::string_view spec, Index p, const DirectionLoader& loader)
{
    const std::string token(spec);
    const auto colon = spec.find(':');
    const std::string_view head = spec.substr(0, colon);
    const std::string_view arg =
        colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    const bool has_arg = colon != std::string_view::npos;

    auto no_arg = [&](Cone c) {
        if (has_arg)
            throw ParseError("cone token '" + token + "' takes no argument");
        return c;
    };
    auto need_arg = [&] {
        if (!has_arg || arg.empty())
            throw ParseError("cone token '" + token + "' needs an argument");
    };

    try
    {
        if (head == "full")
            return no_arg(Cone::full_space(p));
        if (head == "nonneg")
            return no_arg(Cone::nonneg_orthant(p));
        if (head == "coord")
        {
            need_arg();
            const auto j = parse_number<long>(arg, token);
            if (j < 1 || j > p)
                throw ParseError("coordinate out of range 1.." + std::to_string(p) +
                                 " in cone token '" + token + "'");
            return Cone::coordinate(p, j - 1);
        }
        if (head == "ksparse" || head == "ksparse+")
        {
            need_arg();
            const auto k = parse_number<long>(arg, token);
            if (k < 1 || k > p)
                throw ParseError("sparsity out of range 1.." + std::to_string(p) +
                                 " in cone token '" + token + "'");
            auto c = Cone::k_sparse(p, k);
            if (head == "ksparse+")
                return Cone::intersection({std::move(c), Cone::nonneg_orthant(p)});
            return c;
        }
        if (head == "lasso")
        {
            need_arg();
            const auto t = parse_number<double>(arg, token);
            if (!(t > 0.0))
                throw ParseError("lasso radius must be positive in cone token '" + token + "'");
            return Cone::lasso(p, t);
        }
        if (head == "dirs")
        {
            need_arg();
            auto dirs = loader ? loader(std::string(arg)) : load_directions_csv(std::string(arg));
            for (const auto& d : dirs)
                if (d.size() != p)
                    throw ParseError("direction file rows must have " + std::to_string(p) +
                                     " entries (cone token '" + token + "')");
            return Cone::directions(std::move(dirs));
        }
    }
    catch (const ParseError&)
    {
        throw;
    }
    catch (const Error& e)
    {
        throw ParseError("cone token '" + token + "': " + e.what());
    }
    throw ParseError("unknown cone token '" + token + "'");
}

std::vector<Vector> load_directions_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open direction file " + path);
    std::vector<Vector> out;
    std::string line;
    long row = 0;
    while (std::getline(in, line))
    {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string cell;
        long col = 0;
        while (std::getline(ss, cell, ','))
        {
            ++col;
            const auto first = cell.find_first_not_of(" \t\r");
            const auto last = cell.find_last_not_of(" \t\r");
            std::string_view trimmed =
                first == std::string::npos
                    ? std::string_view{}
                    : std::string_view(cell).substr(first, last - first + 1);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
            if (trimmed.empty() || ec != std::errc() || ptr != trimmed.data() + trimmed.size())
                throw ParseError("malformed direction cell at row " + std::to_string(row) +
                                     ", column " + std::to_string(col),
                                 row, col);
            values.push_back(v);
        }
        out.push_back(Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size())));
    }
    if (out.empty())
        throw ParseError("direction file " + path + " is empty");
    return out;
}

}  // namespace conic
