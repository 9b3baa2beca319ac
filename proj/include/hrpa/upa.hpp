// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Uniform planar array baseline. Elements sit on a square lattice in the
// y-z plane, port n at lattice position (n_y, n_z) with
//   n_y = ((n - 1) mod N_Y) + 1,   n_z = ceil(n / N_Y),
// and pattern e_n = exp(j k ((n_y - 1) sin(theta) sin(phi) + (n_z - 1) cos(theta))) e_1,
// k = 2 pi d / lambda.

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/core.hpp"
#include "hrpa/patterns.hpp"

#include <functional>
#include <string>
#include <utility>

namespace hrpa
{

/// Element pattern (e_Theta, e_Phi) as a function of direction in degrees.
using ElementPattern = std::function<std::pair<Complex, Complex>(double theta_deg, double phi_deg)>;

inline ElementPattern isotropic_theta_element()
{
    return [](double, double) { return std::pair<Complex, Complex>{1.0, 0.0}; };
}

inline ElementPattern isotropic_phi_element()
{
    return [](double, double) { return std::pair<Complex, Complex>{0.0, 1.0}; };
}

struct UpaSpec
{
    int n_y = 2;
    int n_z = 2;
    double spacing_over_lambda = 0.5;
    bool dual_pol = false; // two co-located ports per element, Theta- and Phi-polarised

    Index elements() const { return static_cast<Index>(n_y) * n_z; }
    Index ports() const { return dual_pol ? 2 * elements() : elements(); }

    void validate() const
    {
        if (n_y < 1 || n_z < 1)
            throw InvalidArgument("upa: element counts must be >= 1");
        if (!(spacing_over_lambda > 0.0) || !std::isfinite(spacing_over_lambda))
            throw InvalidArgument("upa: spacing must be positive");
    }

    std::string describe() const
    {
        return std::to_string(n_y) + "x" + std::to_string(n_z) + (dual_pol ? " dual-pol" : "") + " UPA, d/lambda " +
               std::to_string(spacing_over_lambda);
    }
};

/// Array-factor phase of element n (1-based).
inline Complex upa_array_factor(const UpaSpec &spec, Index n, double theta_deg, double phi_deg)
{
    const double k = 2.0 * kPi * spec.spacing_over_lambda;
    const Index ny = (n - 1) % spec.n_y + 1;
    const Index nz = (n + spec.n_y - 1) / spec.n_y;
    const double th = deg2rad(theta_deg), ph = deg2rad(phi_deg);
    const double arg = k * (static_cast<double>(ny - 1) * std::sin(th) * std::sin(ph) +
                            static_cast<double>(nz - 1) * std::cos(th));
    return std::polar(1.0, arg);
}

/// Analytic UPA steering source; can be evaluated at arbitrary angles,
/// so finite differences are not limited to a stored grid.
class UpaField
{
public:
    explicit UpaField(UpaSpec spec, ElementPattern element = {}) : spec_(spec), element_(std::move(element))
    {
        spec_.validate();
        if (!element_)
            element_ = isotropic_theta_element();
    }

    const UpaSpec &spec() const { return spec_; }
    Index ports() const { return spec_.ports(); }

    /// Stacked [e_Theta; e_Phi] over all ports.
    CVector steering(double theta_deg, double phi_deg) const
    {
        const Index n = ports();
        const Index ne = spec_.elements();
        CVector s = CVector::Zero(2 * n);
        if (spec_.dual_pol)
        {
            for (Index e = 0; e < ne; ++e)
            {
                const Complex af = upa_array_factor(spec_, e + 1, theta_deg, phi_deg);
                s(e) = af;           // Theta port of element e
                s(n + ne + e) = af;  // Phi port of element e
            }
            return s;
        }
        const auto [et, ep] = element_(theta_deg, phi_deg);
        for (Index e = 0; e < ne; ++e)
        {
            const Complex af = upa_array_factor(spec_, e + 1, theta_deg, phi_deg);
            s(e) = af * et;
            s(n + e) = af * ep;
        }
        return s;
    }

    PatternSet sample(const AngleGrid &grid) const
    {
        CMatrix d(2 * ports(), grid.size());
        for (Index g = 0; g < grid.size(); ++g)
        {
            const Angle a = grid.angle(g);
            d.col(g) = steering(a.theta_deg, a.phi_deg);
        }
        return PatternSet(grid, ports(), std::move(d));
    }

private:
    UpaSpec spec_;
    ElementPattern element_;
};

/// UPA patterns sampled on a grid.
inline PatternSet upa_patterns(int n_y, int n_z, double spacing_over_lambda, const AngleGrid &grid,
                               ElementPattern element = {})
{
    return UpaField(UpaSpec{n_y, n_z, spacing_over_lambda, false}, std::move(element)).sample(grid);
}

inline PatternSet upa_patterns(const UpaSpec &spec, const AngleGrid &grid)
{
    return UpaField(spec).sample(grid);
}

} // namespace hrpa
