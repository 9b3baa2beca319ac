// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/core.hpp"
#include "hrpa/em_dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace hrpa
{

/// Quadrature-weighted overlap of port patterns,
/// G(i, j) = sum_g w_g [e_i(g)^H e_j(g)], summed over both polarisations.
/// `e` is a (2P x G) pattern matrix laid out as PatternSet::data().
inline CMatrix pattern_gram(const CMatrix &e, const AngleGrid &grid, Quadrature q = Quadrature::SolidAngle)
{
    const Index p = e.rows() / 2;
    if (e.rows() != 2 * p || e.cols() != grid.size())
        throw DimensionMismatch("pattern_gram: pattern matrix does not match the grid");
    const RVector sw = grid.weights(q).cwiseSqrt();
    CMatrix gram = CMatrix::Zero(p, p);
    constexpr Index kChunk = 4096;
    for (Index c0 = 0; c0 < e.cols(); c0 += kChunk)
    {
        const Index n = std::min(kChunk, e.cols() - c0);
        const CMatrix s = e.middleCols(c0, n) * sw.segment(c0, n).asDiagonal();
        gram.noalias() += s.topRows(p).conjugate() * s.topRows(p).transpose();
        gram.noalias() += s.bottomRows(p).conjugate() * s.bottomRows(p).transpose();
    }
    return gram;
}

namespace detail
{

struct SphereBasis
{
    Eigen::Vector3d r, t, p; // r-hat, theta-hat, phi-hat
};

inline SphereBasis sphere_basis(double theta_deg, double phi_deg)
{
    const double th = deg2rad(theta_deg), ph = deg2rad(phi_deg);
    const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
    return {{st * cp, st * sp, ct}, {ct * cp, ct * sp, -st}, {-sp, cp, 0.0}};
}

} // namespace detail

/// Far-field (Theta, Phi) pattern of a unit-current short dipole, optionally
/// with its ground-plane image; zero behind the ground plane (x < 0).
inline std::pair<Complex, Complex> dipole_pattern(const PortGeometry &port, double length_mm, double k_per_mm,
                                                  bool ground_plane, double theta_deg, double phi_deg)
{
    const auto b = detail::sphere_basis(theta_deg, phi_deg);
    if (ground_plane && b.r.x() < -1e-12)
        return {Complex(0.0), Complex(0.0)};
    const Complex amp = Complex(0.0, kEta0 * k_per_mm * length_mm / (4.0 * kPi));

    auto term = [&](const Eigen::Vector3d &u, const Eigen::Vector3d &pos) {
        const Complex ph = std::polar(1.0, k_per_mm * pos.dot(b.r));
        return std::pair<Complex, Complex>{-amp * u.dot(b.t) * ph, -amp * u.dot(b.p) * ph};
    };
    auto [et, ep] = term(port.direction, port.position_mm);
    if (ground_plane)
    {
        const Eigen::Vector3d u_img(port.direction.x(), -port.direction.y(), -port.direction.z());
        const Eigen::Vector3d pos_img(-port.position_mm.x(), port.position_mm.y(), port.position_mm.z());
        auto [it, ip] = term(u_img, pos_img);
        et += it;
        ep += ip;
    }
    return {et, ep};
}

/// Synthetic (M+Q)-port dataset from a minimum-scattering coupled-dipole model.
///
/// Feed ports are vertical dipoles at pixel centers, loaded ports horizontal
/// dipoles along pixel edges, both imaged in the ground plane. The
/// resistance matrix is the pattern overlap Gram divided by 2*eta (plus a
/// diagonal floor), so Re{Z} is positive semidefinite and radiated power
/// balances accepted power. The reactance uses the -cos(kr)/(kr) kernel.
inline EMDataset generate_synthetic_dataset(const PortLayout &layout, const AngleGrid &grid,
                                            const DipoleModelParams &params = {}, std::uint64_t seed = 0)
{
    layout.validate();
    const std::vector<PortGeometry> ports = layout.ports();
    const Index m = layout.feed_count();
    const Index p = layout.port_count();
    if (p == 0)
        throw InvalidArgument("synthetic dataset: layout has no ports");
    for (Index i = 0; i < p; ++i)
        for (Index j = i + 1; j < p; ++j)
            if ((ports[static_cast<std::size_t>(i)].position_mm - ports[static_cast<std::size_t>(j)].position_mm)
                    .norm() < 1e-9)
                throw InvalidArgument("synthetic dataset: ports " + std::to_string(i + 1) + " and " +
                                      std::to_string(j + 1) + " coincide");

    const double k = layout.wavenumber_per_mm();
    const double feed_len = params.feed_length_mm.value_or(layout.height_mm);
    const double load_len = params.loaded_length_mm.value_or(std::min(layout.pitch_y_mm(), layout.pitch_z_mm()));
    if (!(feed_len > 0.0) || !(load_len > 0.0))
        throw InvalidArgument("synthetic dataset: dipole lengths must be positive");

    CMatrix e_oc(2 * p, grid.size());
    for (Index g = 0; g < grid.size(); ++g)
    {
        const Angle a = grid.angle(g);
        for (Index i = 0; i < p; ++i)
        {
            const double len = i < m ? feed_len : load_len;
            auto [et, ep] = dipole_pattern(ports[static_cast<std::size_t>(i)], len, k, params.ground_plane,
                                           a.theta_deg, a.phi_deg);
            e_oc(i, g) = et;
            e_oc(p + i, g) = ep;
        }
    }

    const CMatrix gram = pattern_gram(e_oc, grid, Quadrature::SolidAngle);
    RMatrix r = gram.real() / (2.0 * kEta0);
    r = (0.5 * (r + r.transpose())).eval();
    r.diagonal().array() += params.resistance_floor;

    RMatrix x(p, p);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, params.reactance_jitter > 0.0 ? params.reactance_jitter : 1.0);
    for (Index i = 0; i < p; ++i)
    {
        double self = i < m ? params.feed_self_reactance : params.loaded_self_reactance;
        if (params.reactance_jitter > 0.0)
            self += jitter(rng);
        x(i, i) = self;
        for (Index j = i + 1; j < p; ++j)
        {
            const double kr =
                k * (ports[static_cast<std::size_t>(i)].position_mm - ports[static_cast<std::size_t>(j)].position_mm)
                        .norm();
            x(i, j) = x(j, i) = -params.mutual_reactance_scale * std::cos(kr) / kr;
        }
    }

    CMatrix z(p, p);
    z.real() = r;
    z.imag() = x;
    return EMDataset(layout, grid, std::move(z), std::move(e_oc), "synthetic", params);
}

} // namespace hrpa
