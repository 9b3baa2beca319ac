// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Fisher information and CRLB for 2-D angle of arrival.
//
// For a steering vector a(theta, phi) = [e_Theta; e_Phi] (2N entries) the
// FIM is F = J^H D J with J = [da/dtheta, da/dphi] and D the projector onto
// the orthogonal complement of a. Then C = Re{F}^-1 / (2 SNR).

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/core.hpp"
#include "hrpa/parallel.hpp"
#include "hrpa/patterns.hpp"
#include "hrpa/upa.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <charconv>
#include <concepts>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

namespace hrpa
{

struct CRLBResult
{
    Eigen::Matrix2d c = Eigen::Matrix2d::Zero(); // [c_tt c_tp; c_pt c_pp], rad^2
    double objective = 0.0;                      // sqrt(c_tt + c_pp), rad
    Angle angle;
    double snr_linear = 1.0;
    bool singular = false;

    double c_tt() const { return c(0, 0); }
    double c_tp() const { return c(0, 1); }
    double c_pp() const { return c(1, 1); }
};

inline double objective(const Eigen::Matrix2d &c)
{
    const double tr = c(0, 0) + c(1, 1);
    if (std::isnan(tr))
        return kInf;
    return std::sqrt(tr);
}

/// D = I - r^H r / |r|^2 for a row vector r.
inline CMatrix projection_matrix(const Eigen::RowVectorXcd &r)
{
    const double n2 = r.squaredNorm();
    if (!(n2 > 0.0))
        throw NumericalError("projection: zero steering vector");
    CMatrix d = -(r.adjoint() * r) / n2;
    d.diagonal().array() += 1.0;
    return d;
}

/// Projector onto the complement of a column steering vector a, i.e.
/// projection_matrix(a^H).
inline CMatrix steering_projection(const CVector &a) { return projection_matrix(a.adjoint()); }

/// Sources of steering vectors that can be evaluated at arbitrary angles.
template <class S>
concept FieldSource = requires(const S &s, double t, double p) {
    { s.ports() } -> std::convertible_to<Index>;
    { s.steering(t, p) } -> std::convertible_to<CVector>;
};

struct Jacobian
{
    CVector a;     // steering vector at the angle
    CMatrix j;     // 2N x 2: d a / d theta, d a / d phi (per radian)
};

namespace detail
{
inline Index fd_multiple(const AngleGrid &grid, double fd_step_deg)
{
    if (fd_step_deg <= 0.0)
        return 1;
    const double r = fd_step_deg / grid.step();
    const auto s = static_cast<Index>(std::llround(r));
    if (s < 1 || std::abs(r - static_cast<double>(s)) > 1e-9 * std::max(1.0, r))
        throw InvalidArgument("finite-difference step must be a whole multiple of the grid step " +
                              std::to_string(grid.step()) + " deg");
    return s;
}

// Central difference along one index axis, one-sided at the grid edge.
template <class Get> CVector index_derivative(Index i, Index n, Index s, double h_rad, Get &&get)
{
    const Index lo = i - s, hi = i + s;
    if (lo >= 0 && hi < n)
        return (get(hi) - get(lo)) / (2.0 * h_rad);
    if (hi < n)
        return (get(hi) - get(i)) / h_rad;
    if (lo >= 0)
        return (get(i) - get(lo)) / h_rad;
    return CVector::Zero(get(i).size());
}
} // namespace detail

/// Jacobian from sampled patterns by finite differences on the grid.
/// fd_step_deg <= 0 selects the grid step.
inline Jacobian steering_jacobian(const PatternSet &ps, const Angle &angle, double fd_step_deg = 0.0)
{
    const AngleGrid &grid = ps.grid();
    const auto it = grid.locate_theta(angle.theta_deg);
    const auto ip = grid.locate_phi(angle.phi_deg);
    if (!it || !ip)
        throw CoverageError("angle (" + std::to_string(angle.theta_deg) + ", " + std::to_string(angle.phi_deg) +
                            ") is not a point of grid " + grid.describe());
    const Index s = detail::fd_multiple(grid, fd_step_deg);
    const double h = deg2rad(static_cast<double>(s) * grid.step());
    Jacobian out;
    out.a = ps.steering(grid.index(*it, *ip));
    out.j.resize(out.a.size(), 2);
    out.j.col(0) = detail::index_derivative(*it, grid.n_theta(), s, h,
                                            [&](Index k) { return CVector(ps.steering(grid.index(k, *ip))); });
    out.j.col(1) = detail::index_derivative(*ip, grid.n_phi(), s, h,
                                            [&](Index k) { return CVector(ps.steering(grid.index(*it, k))); });
    return out;
}

/// Jacobian of an analytic source by central differences of size fd_step_deg
/// (one-sided where theta +- step leaves [0, 180]).
template <FieldSource S> Jacobian steering_jacobian(const S &src, const Angle &angle, double fd_step_deg)
{
    if (!(fd_step_deg > 0.0))
        throw InvalidArgument("finite-difference step must be positive");
    const double t = angle.theta_deg, p = angle.phi_deg, d = fd_step_deg;
    const double h = deg2rad(d);
    Jacobian out;
    out.a = src.steering(t, p);
    out.j.resize(out.a.size(), 2);
    if (t - d >= 0.0 && t + d <= 180.0)
        out.j.col(0) = (src.steering(t + d, p) - src.steering(t - d, p)) / (2.0 * h);
    else if (t + d <= 180.0)
        out.j.col(0) = (src.steering(t + d, p) - out.a) / h;
    else
        out.j.col(0) = (out.a - src.steering(t - d, p)) / h;
    out.j.col(1) = (src.steering(t, p + d) - src.steering(t, p - d)) / (2.0 * h);
    return out;
}

/// C = Re{J^H D J}^-1 / (2 snr); singular FIMs give +inf entries.
inline CRLBResult crlb_from_jacobian(const Jacobian &jac, const Angle &angle, double snr_linear)
{
    if (!(snr_linear > 0.0))
        throw InvalidArgument("SNR must be positive");
    CRLBResult r;
    r.angle = angle;
    r.snr_linear = snr_linear;
    auto mark_singular = [&] {
        r.singular = true;
        r.c.setConstant(kInf);
        r.objective = kInf;
        return r;
    };
    if (!(jac.a.squaredNorm() > 0.0) || !jac.a.allFinite() || !jac.j.allFinite())
        return mark_singular();
    const CMatrix d = steering_projection(jac.a);
    const CMatrix f = jac.j.adjoint() * d * jac.j;
    Eigen::Matrix2d fr = f.real();
    fr = 0.5 * (fr + fr.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(fr, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0), lmax = eig.eigenvalues()(1);
    if (!(lmax > 0.0) || lmin <= 1e-12 * lmax)
        return mark_singular();
    r.c = fr.inverse() / (2.0 * snr_linear);
    r.c(1, 0) = r.c(0, 1);
    r.objective = objective(r.c);
    return r;
}

inline CRLBResult crlb_matrix(const PatternSet &ps, const Angle &angle, double snr_linear, double fd_step_deg = 0.0)
{
    return crlb_from_jacobian(steering_jacobian(ps, angle, fd_step_deg), angle, snr_linear);
}

template <FieldSource S>
CRLBResult crlb_matrix(const S &src, const Angle &angle, double snr_linear, double fd_step_deg)
{
    return crlb_from_jacobian(steering_jacobian(src, angle, fd_step_deg), angle, snr_linear);
}

/// Closed-form UPA CRLB with B_Y = N_Y(N_Y^2-1)/12, B_Z = N_Z(N_Z^2-1)/12.
inline CRLBResult upa_crlb_closed_form(int n_y, int n_z, double spacing_over_lambda, const Angle &angle,
                                       double snr_linear)
{
    if (n_y < 1 || n_z < 1 || !(spacing_over_lambda > 0.0) || !(snr_linear > 0.0))
        throw InvalidArgument("closed-form UPA CRLB: invalid array or SNR");
    CRLBResult r;
    r.angle = angle;
    r.snr_linear = snr_linear;
    const double by = n_y * (static_cast<double>(n_y) * n_y - 1.0) / 12.0;
    const double bz = n_z * (static_cast<double>(n_z) * n_z - 1.0) / 12.0;
    const double k = 2.0 * kPi * spacing_over_lambda;
    const double th = deg2rad(angle.theta_deg), ph = deg2rad(angle.phi_deg);
    const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
    if (std::abs(st * cp) < 1e-12 || by * bz == 0.0)
    {
        r.singular = true;
        r.c.setConstant(kInf);
        r.objective = kInf;
        return r;
    }
    const double den = 2.0 * std::pow(k, 4) * by * bz * st * st * cp * cp * snr_linear;
    r.c(0, 0) = by * st * st * cp * cp / den;
    r.c(0, 1) = r.c(1, 0) = -by * ct * st * cp * sp / den;
    r.c(1, 1) = (bz * st * st + by * ct * ct * sp * sp) / den;
    r.objective = objective(r.c);
    return r;
}

struct CRLBMap
{
    SensingArea area;
    Index n_theta = 0, n_phi = 0;
    std::vector<CRLBResult> points; // theta-major over the area's grid points
    double worst = 0.0;
    Angle worst_angle;
    Index worst_index = 0;
};

namespace detail
{
inline void reduce_worst(CRLBMap &m)
{
    m.worst = -1.0;
    for (std::size_t i = 0; i < m.points.size(); ++i)
    {
        const double o = std::isnan(m.points[i].objective) ? kInf : m.points[i].objective;
        if (o > m.worst)
        {
            m.worst = o;
            m.worst_index = static_cast<Index>(i);
            m.worst_angle = m.points[i].angle;
        }
    }
}
} // namespace detail

/// CRLB at every grid point of `area`.
inline CRLBMap crlb_map(const PatternSet &ps, const SensingArea &area, double snr_linear, double fd_step_deg = 0.0,
                        unsigned threads = 1)
{
    const GridBox box = area_box(ps.grid(), area);
    CRLBMap m;
    m.area = area;
    m.n_theta = box.n_theta();
    m.n_phi = box.n_phi();
    m.points.resize(static_cast<std::size_t>(box.size()));
    parallel_for(m.points.size(), threads, [&](std::size_t k) {
        const Index it = box.it0 + static_cast<Index>(k) / box.n_phi();
        const Index ip = box.ip0 + static_cast<Index>(k) % box.n_phi();
        m.points[k] = crlb_matrix(ps, {ps.grid().theta_deg(it), ps.grid().phi_deg(ip)}, snr_linear, fd_step_deg);
    });
    detail::reduce_worst(m);
    return m;
}

/// CRLB of an analytic source at the points of `area` on a regular step.
template <FieldSource S>
CRLBMap crlb_map(const S &src, const SensingArea &area, double step_deg, double snr_linear, double fd_step_deg,
                 unsigned threads = 1)
{
    const AngleGrid g(area.theta_min, area.theta_max, area.phi_min, area.phi_max, step_deg);
    CRLBMap m;
    m.area = area;
    m.n_theta = g.n_theta();
    m.n_phi = g.n_phi();
    m.points.resize(static_cast<std::size_t>(g.size()));
    parallel_for(m.points.size(), threads, [&](std::size_t k) {
        m.points[k] = crlb_matrix(src, g.angle(static_cast<Index>(k)), snr_linear, fd_step_deg);
    });
    detail::reduce_worst(m);
    return m;
}

/// Closed-form UPA map on a regular step.
inline CRLBMap upa_closed_form_map(const UpaSpec &spec, const SensingArea &area, double step_deg, double snr_linear)
{
    const AngleGrid g(area.theta_min, area.theta_max, area.phi_min, area.phi_max, step_deg);
    CRLBMap m;
    m.area = area;
    m.n_theta = g.n_theta();
    m.n_phi = g.n_phi();
    for (Index k = 0; k < g.size(); ++k)
        m.points.push_back(upa_crlb_closed_form(spec.n_y, spec.n_z, spec.spacing_over_lambda, g.angle(k), snr_linear));
    detail::reduce_worst(m);
    return m;
}

/// "inf" for +infinity, otherwise shortest round-trip text.
inline std::string format_value(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_crlb_map_csv(std::ostream &out, const CRLBMap &m)
{
    out << "theta_deg,phi_deg,c_tt,c_tp,c_pp,objective\n";
    for (const auto &p : m.points)
        out << format_value(p.angle.theta_deg) << ',' << format_value(p.angle.phi_deg) << ','
            << format_value(p.c_tt()) << ',' << format_value(p.c_tp()) << ',' << format_value(p.c_pp()) << ','
            << format_value(p.objective) << '\n';
}

} // namespace hrpa
