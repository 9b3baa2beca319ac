// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------

#pragma once

#include "hrpa/core.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hrpa
{

// How far-field power integrals are discretised. SolidAngle uses the
// physical sin(theta) dtheta dphi element; Literal drops the sin(theta).
enum class Quadrature
{
    SolidAngle,
    Literal
};

namespace detail
{
inline constexpr double kGridTol = 1e-9;

// Number of whole steps in `span`, or -1 when `step` does not divide it.
inline long whole_steps(double span, double step)
{
    const double n = span / step;
    const double r = std::round(n);
    if (std::abs(n - r) > kGridTol * std::max(1.0, std::abs(n)))
        return -1;
    return static_cast<long>(r);
}
} // namespace detail

/// Regular (theta, phi) sampling of the sphere, enumerated row-major with
/// theta outer and phi inner. Both endpoints are included, except when the
/// phi span is a full 360 degrees: then phi_stop duplicates phi_start and
/// is dropped.
class AngleGrid
{
public:
    AngleGrid() : AngleGrid(0.0, 180.0, -180.0, 180.0, 1.0) {}

    AngleGrid(double theta_start, double theta_stop, double phi_start, double phi_stop, double step)
        : theta_start_(theta_start), theta_stop_(theta_stop), phi_start_(phi_start), phi_stop_(phi_stop), step_(step)
    {
        if (!(step > 0.0) || !std::isfinite(step))
            throw InvalidArgument("angle grid: step must be positive");
        const double eps = detail::kGridTol;
        if (theta_start < -eps || theta_stop > 180.0 + eps || theta_stop < theta_start)
            throw InvalidArgument("angle grid: theta range must lie in [0, 180] with start <= stop");
        if (phi_start < -180.0 - eps || phi_stop > 180.0 + eps || phi_stop < phi_start)
            throw InvalidArgument("angle grid: phi range must lie in [-180, 180] with start <= stop");
        const long nt = detail::whole_steps(theta_stop - theta_start, step);
        const long np = detail::whole_steps(phi_stop - phi_start, step);
        if (nt < 0 || np < 0)
            throw InvalidArgument("angle grid: step " + format(step) + " deg does not divide the angular spans");
        periodic_ = std::abs((phi_stop - phi_start) - 360.0) < eps;
        n_theta_ = static_cast<Index>(nt) + 1;
        n_phi_ = periodic_ ? static_cast<Index>(np) : static_cast<Index>(np) + 1;
    }

    static AngleGrid full_sphere(double step = 1.0) { return AngleGrid(0.0, 180.0, -180.0, 180.0, step); }

    double theta_start() const { return theta_start_; }
    double theta_stop() const { return theta_stop_; }
    double phi_start() const { return phi_start_; }
    double phi_stop() const { return phi_stop_; }
    double step() const { return step_; }
    bool phi_periodic() const { return periodic_; }

    Index n_theta() const { return n_theta_; }
    Index n_phi() const { return n_phi_; }
    Index size() const { return n_theta_ * n_phi_; }

    double theta_deg(Index it) const { return theta_start_ + static_cast<double>(it) * step_; }
    double phi_deg(Index ip) const { return phi_start_ + static_cast<double>(ip) * step_; }
    Index index(Index it, Index ip) const { return it * n_phi_ + ip; }
    Index theta_index(Index g) const { return g / n_phi_; }
    Index phi_index(Index g) const { return g % n_phi_; }
    Angle angle(Index g) const { return {theta_deg(theta_index(g)), phi_deg(phi_index(g))}; }

    std::optional<Index> locate_theta(double theta) const { return locate(theta, theta_start_, n_theta_); }
    std::optional<Index> locate_phi(double phi) const { return locate(phi, phi_start_, n_phi_); }

    std::optional<Index> locate(const Angle &a) const
    {
        auto it = locate_theta(a.theta_deg);
        auto ip = locate_phi(a.phi_deg);
        if (!it || !ip)
            return std::nullopt;
        return index(*it, *ip);
    }

    /// Quadrature weight of grid point g, in steradians for SolidAngle.
    double weight(Index g, Quadrature q = Quadrature::SolidAngle) const
    {
        const double d = deg2rad(step_);
        if (q == Quadrature::Literal)
            return d * d;
        return std::abs(std::sin(deg2rad(theta_deg(theta_index(g))))) * d * d;
    }

    RVector weights(Quadrature q = Quadrature::SolidAngle) const
    {
        RVector w(size());
        for (Index g = 0; g < size(); ++g)
            w(g) = weight(g, q);
        return w;
    }

    /// Rectangular sub-grid with the same step, in index ranges [it0, it1] x [ip0, ip1].
    AngleGrid sub(Index it0, Index it1, Index ip0, Index ip1) const
    {
        return AngleGrid(theta_deg(it0), theta_deg(it1), phi_deg(ip0), phi_deg(ip1), step_);
    }

    bool same_as(const AngleGrid &o) const
    {
        auto eq = [](double a, double b) { return std::abs(a - b) <= detail::kGridTol; };
        return eq(theta_start_, o.theta_start_) && eq(theta_stop_, o.theta_stop_) && eq(phi_start_, o.phi_start_) &&
               eq(phi_stop_, o.phi_stop_) && eq(step_, o.step_);
    }

    std::string describe() const
    {
        std::ostringstream s;
        s << "theta[" << theta_start_ << ", " << theta_stop_ << "] phi[" << phi_start_ << ", " << phi_stop_
          << (periodic_ ? ")" : "]") << " step " << step_;
        return s.str();
    }

private:
    static std::string format(double v)
    {
        std::ostringstream s;
        s << v;
        return s.str();
    }

    std::optional<Index> locate(double v, double start, Index n) const
    {
        const double x = (v - start) / step_;
        const double r = std::round(x);
        if (std::abs(x - r) > 1e-6)
            return std::nullopt;
        const auto i = static_cast<Index>(r);
        if (i < 0 || i >= n)
            return std::nullopt;
        return i;
    }

    double theta_start_, theta_stop_, phi_start_, phi_stop_, step_;
    bool periodic_ = false;
    Index n_theta_ = 0, n_phi_ = 0;
};

/// Closed angular rectangle used as an optimisation/evaluation region.
struct SensingArea
{
    double theta_min = 0.0;
    double theta_max = 0.0;
    double phi_min = 0.0;
    double phi_max = 0.0;

    friend bool operator==(const SensingArea &, const SensingArea &) = default;

    double theta_span() const { return theta_max - theta_min; }
    double phi_span() const { return phi_max - phi_min; }
    Angle center() const { return {0.5 * (theta_min + theta_max), 0.5 * (phi_min + phi_max)}; }

    bool contains(const Angle &a, double tol = 1e-9) const
    {
        return a.theta_deg >= theta_min - tol && a.theta_deg <= theta_max + tol && a.phi_deg >= phi_min - tol &&
               a.phi_deg <= phi_max + tol;
    }

    bool contains(const SensingArea &o, double tol = 1e-9) const
    {
        return o.theta_min >= theta_min - tol && o.theta_max <= theta_max + tol && o.phi_min >= phi_min - tol &&
               o.phi_max <= phi_max + tol;
    }

    std::string describe() const
    {
        std::ostringstream s;
        s << "theta[" << theta_min << ", " << theta_max << "] x phi[" << phi_min << ", " << phi_max << "]";
        return s.str();
    }
};

/// Index box of an area's grid points: [it0, it1] x [ip0, ip1].
struct GridBox
{
    Index it0 = 0, it1 = 0, ip0 = 0, ip1 = 0;

    Index n_theta() const { return it1 - it0 + 1; }
    Index n_phi() const { return ip1 - ip0 + 1; }
    Index size() const { return n_theta() * n_phi(); }
};

/// Grid points of `area`; throws CoverageError if the area is empty,
/// outside the grid, or its bounds are not grid-aligned.
inline GridBox area_box(const AngleGrid &grid, const SensingArea &area)
{
    if (!(area.theta_max >= area.theta_min) || !(area.phi_max >= area.phi_min))
        throw CoverageError("sensing area is empty: " + area.describe());
    auto it0 = grid.locate_theta(area.theta_min);
    auto it1 = grid.locate_theta(area.theta_max);
    auto ip0 = grid.locate_phi(area.phi_min);
    auto ip1 = grid.locate_phi(area.phi_max);
    if (!it0 || !it1 || !ip0 || !ip1)
        throw CoverageError("sensing area " + area.describe() + " is not aligned to / contained in grid " +
                            grid.describe());
    return {*it0, *it1, *ip0, *ip1};
}

inline std::vector<Angle> area_angles(const AngleGrid &grid, const SensingArea &area)
{
    const GridBox b = area_box(grid, area);
    std::vector<Angle> out;
    out.reserve(static_cast<std::size_t>(b.size()));
    for (Index it = b.it0; it <= b.it1; ++it)
        for (Index ip = b.ip0; ip <= b.ip1; ++ip)
            out.push_back({grid.theta_deg(it), grid.phi_deg(ip)});
    return out;
}

} // namespace hrpa
