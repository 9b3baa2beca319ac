// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Loaded multiport network reduction.
//
// Ports 1..M are feeds, M+1..M+Q loaded ports. A geometry selects N active
// feeds F (the rest are muted, i.e. open) and a switch state g per loaded
// port (1 = open, realised as a large z_oc; 0 = short). With
//
//   X = (Z_LL + Z_L)^-1 Z_LA,          i_L = -X i_A,
//
// the active-port impedance and open-circuit patterns are
//
//   Z_F  = Z_AA - Z_AL X,
//   E_ocF = E_oc (P_A - P_L X).
//
// Coupled patterns per unit source voltage: E_F = E_ocF (Z_0 + Z_F)^-1.

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/core.hpp"
#include "hrpa/em_dataset.hpp"
#include "hrpa/patterns.hpp"
#include "hrpa/synthetic.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hrpa
{

/// One HRPA state. Feed ports are 1-based; connections[q] is the switch
/// state of port M+1+q.
struct GeometryConfig
{
    std::vector<int> feed_ports;
    std::vector<std::uint8_t> connections;

    friend bool operator==(const GeometryConfig &, const GeometryConfig &) = default;

    Index n() const { return static_cast<Index>(feed_ports.size()); }

    /// g as a bitstring, first character = port M+1.
    std::string bits() const
    {
        std::string s;
        s.reserve(connections.size());
        for (auto b : connections)
            s += b ? '1' : '0';
        return s;
    }

    std::string describe() const
    {
        std::string s = "F={";
        for (std::size_t i = 0; i < feed_ports.size(); ++i)
            s += (i ? "," : "") + std::to_string(feed_ports[i]);
        return s + "} g=" + bits();
    }
};

inline std::vector<std::uint8_t> parse_bits(const std::string &s)
{
    std::vector<std::uint8_t> g;
    g.reserve(s.size());
    for (char c : s)
    {
        if (c != '0' && c != '1')
            throw InvalidArgument("connection bitstring may only contain 0 and 1");
        g.push_back(c == '1');
    }
    return g;
}

inline void validate_config(const GeometryConfig &cfg, Index m, Index q)
{
    if (cfg.feed_ports.empty())
        throw InvalidArgument("geometry: at least one feed port must be active");
    std::vector<bool> seen(static_cast<std::size_t>(m) + 1, false);
    for (int f : cfg.feed_ports)
    {
        if (f < 1 || f > m)
            throw InvalidArgument("geometry: feed port " + std::to_string(f) + " outside 1.." + std::to_string(m));
        if (seen[static_cast<std::size_t>(f)])
            throw InvalidArgument("geometry: duplicate feed port " + std::to_string(f));
        seen[static_cast<std::size_t>(f)] = true;
    }
    if (static_cast<Index>(cfg.connections.size()) != q)
        throw InvalidArgument("geometry: " + std::to_string(cfg.connections.size()) +
                              " connection bits given for " + std::to_string(q) + " loaded ports");
    for (auto b : cfg.connections)
        if (b > 1)
            throw InvalidArgument("geometry: connection entries must be 0 or 1");
}

/// Which measure of input power normalises the efficiency.
enum class EfficiencyMode
{
    AcceptedPower, // 2 eta Re{i^H Z_F i}, i = (Z_0 + Z_F)^-1 u_n
    Literal        // eta Re{[(Z_0 + Z_F)^-1]_nn}
};

struct FeedNetworkConfig
{
    std::vector<Complex> source_impedances; // empty: 50 ohm on every active port
    double z_oc = 1e9;
    Quadrature quadrature = Quadrature::SolidAngle;
    EfficiencyMode efficiency_mode = EfficiencyMode::AcceptedPower;
    bool normalize_patterns = false; // scale each E_F column to unit average power before Lambda^1/2

    Complex source(Index n) const
    {
        if (source_impedances.empty())
            return {50.0, 0.0};
        if (source_impedances.size() == 1)
            return source_impedances.front();
        return source_impedances.at(static_cast<std::size_t>(n));
    }

    void validate(Index n) const
    {
        if (!(z_oc >= 1e6))
            throw InvalidArgument("feed network: z_oc must be >= 1e6 ohm");
        if (source_impedances.size() > 1 && static_cast<Index>(source_impedances.size()) != n)
            throw InvalidArgument("feed network: " + std::to_string(source_impedances.size()) +
                                  " source impedances for " + std::to_string(n) + " active ports");
        for (Index i = 0; i < n; ++i)
            if (!(source(i).real() > 0.0))
                throw InvalidArgument("feed network: source impedances need a positive real part");
    }
};

/// Port numbers (1-based) in active, muted and loaded order.
struct PortPermutation
{
    std::vector<int> active;
    std::vector<int> muted;
    std::vector<int> loaded;

    std::vector<int> order() const
    {
        std::vector<int> o(active);
        o.insert(o.end(), muted.begin(), muted.end());
        o.insert(o.end(), loaded.begin(), loaded.end());
        return o;
    }
};

inline PortPermutation build_permutation(const std::vector<int> &feed_ports, Index m, Index q)
{
    GeometryConfig probe{feed_ports, std::vector<std::uint8_t>(static_cast<std::size_t>(q), 0)};
    validate_config(probe, m, q);
    PortPermutation p;
    p.active = feed_ports;
    std::vector<bool> on(static_cast<std::size_t>(m) + 1, false);
    for (int f : feed_ports)
        on[static_cast<std::size_t>(f)] = true;
    for (int i = 1; i <= m; ++i)
        if (!on[static_cast<std::size_t>(i)])
            p.muted.push_back(i);
    for (Index i = m + 1; i <= m + q; ++i)
        p.loaded.push_back(static_cast<int>(i));
    return p;
}

struct ImpedanceBlocks
{
    CMatrix aa, am, al, mm, ml, ll;
};

namespace detail
{
inline CMatrix take(const CMatrix &z, const std::vector<int> &rows, const std::vector<int> &cols)
{
    CMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Index>(r), static_cast<Index>(c)) = z(rows[r] - 1, cols[c] - 1);
    return out;
}

inline CMatrix take_rows(const CMatrix &e, const std::vector<int> &ports, Index offset)
{
    CMatrix out(static_cast<Index>(ports.size()), e.cols());
    for (std::size_t r = 0; r < ports.size(); ++r)
        out.row(static_cast<Index>(r)) = e.row(offset + ports[r] - 1);
    return out;
}
} // namespace detail

inline ImpedanceBlocks partition_impedance(const CMatrix &z, const PortPermutation &p)
{
    const auto total = static_cast<Index>(p.active.size() + p.muted.size() + p.loaded.size());
    if (z.rows() != total || z.cols() != total)
        throw DimensionMismatch("partition: Z is " + std::to_string(z.rows()) + "x" + std::to_string(z.cols()) +
                                " but the permutation covers " + std::to_string(total) + " ports");
    return {detail::take(z, p.active, p.active), detail::take(z, p.active, p.muted),
            detail::take(z, p.active, p.loaded), detail::take(z, p.muted, p.muted),
            detail::take(z, p.muted, p.loaded), detail::take(z, p.loaded, p.loaded)};
}

inline CMatrix load_matrix(const std::vector<std::uint8_t> &g, double z_oc)
{
    const auto q = static_cast<Index>(g.size());
    CMatrix zl = CMatrix::Zero(q, q);
    for (Index i = 0; i < q; ++i)
        zl(i, i) = Complex(z_oc * static_cast<double>(g[static_cast<std::size_t>(i)]), 0.0);
    return zl;
}

/// Loaded-port elimination for one geometry.
struct LoadReduction
{
    PortPermutation perm;
    CMatrix x;     // (Z_LL + Z_L)^-1 Z_LA, Q x N
    CMatrix z_f;   // N x N
    double rcond = 1.0;
    bool ill_conditioned = false; // rcond below 1e-12
};

inline LoadReduction reduce_network(const CMatrix &z, Index m, const GeometryConfig &cfg, double z_oc)
{
    const Index q = z.rows() - m;
    if (z.rows() != z.cols() || q < 0)
        throw DimensionMismatch("network: Z must be square with at least M rows");
    validate_config(cfg, m, q);
    LoadReduction red;
    red.perm = build_permutation(cfg.feed_ports, m, q);
    const CMatrix z_aa = detail::take(z, red.perm.active, red.perm.active);
    if (q == 0)
    {
        red.x = CMatrix::Zero(0, cfg.n());
        red.z_f = z_aa;
        return red;
    }
    const CMatrix z_al = detail::take(z, red.perm.active, red.perm.loaded);
    const CMatrix z_la = detail::take(z, red.perm.loaded, red.perm.active);
    const CMatrix k = detail::take(z, red.perm.loaded, red.perm.loaded) + load_matrix(cfg.connections, z_oc);
    Eigen::PartialPivLU<CMatrix> lu(k);
    red.rcond = lu.rcond();
    if (!(red.rcond > 1e-15))
        throw NumericalError("network: Z_LL + Z_L is singular (rcond " + std::to_string(red.rcond) + ") for " +
                             cfg.describe());
    red.ill_conditioned = red.rcond < 1e-12;
    red.x = lu.solve(z_la);
    red.z_f = z_aa - z_al * red.x;
    if (!red.z_f.allFinite())
        throw NumericalError("network: non-finite feed impedance for " + cfg.describe());
    return red;
}

inline CMatrix feed_impedance(const CMatrix &z, Index m, const GeometryConfig &cfg,
                              const FeedNetworkConfig &net = {})
{
    return reduce_network(z, m, cfg, net.z_oc).z_f;
}

inline CMatrix feed_impedance(const EMDataset &ds, const GeometryConfig &cfg, const FeedNetworkConfig &net = {})
{
    return feed_impedance(ds.z(), ds.feed_count(), cfg, net);
}

struct PortCurrents
{
    CVector muted;
    CVector loaded;
};

/// Currents at muted and loaded ports for active currents i_a, solving the
/// full network with the muted feeds terminated in `muted_impedance`.
inline PortCurrents exact_port_currents(const CMatrix &z, Index m, const GeometryConfig &cfg,
                                        double muted_impedance, const CVector &i_a, double z_oc = 1e9)
{
    if (!(muted_impedance > 0.0))
        throw InvalidArgument("exact currents: muted impedance must be positive");
    const Index q = z.rows() - m;
    validate_config(cfg, m, q);
    if (i_a.size() != cfg.n())
        throw DimensionMismatch("exact currents: i_A has wrong length");
    const PortPermutation p = build_permutation(cfg.feed_ports, m, q);
    const auto nm = static_cast<Index>(p.muted.size());
    std::vector<int> passive(p.muted);
    passive.insert(passive.end(), p.loaded.begin(), p.loaded.end());
    PortCurrents out{CVector(nm), CVector(q)};
    if (passive.empty())
        return out;

    CMatrix k = detail::take(z, passive, passive);
    for (Index i = 0; i < nm; ++i)
        k(i, i) += muted_impedance;
    for (Index i = 0; i < q; ++i)
        k(nm + i, nm + i) += z_oc * static_cast<double>(cfg.connections[static_cast<std::size_t>(i)]);
    Eigen::PartialPivLU<CMatrix> lu(k);
    if (!(lu.rcond() > 1e-15))
        throw NumericalError("exact currents: passive block is singular for " + cfg.describe());
    const CVector i_p = -lu.solve(detail::take(z, passive, p.active) * i_a);
    out.muted = i_p.head(nm);
    out.loaded = i_p.tail(q);
    return out;
}

/// Loaded-port currents with muted feeds open: i_L = -X i_A.
inline CVector approximate_loaded_currents(const CMatrix &z, Index m, const GeometryConfig &cfg, const CVector &i_a,
                                           double z_oc = 1e9)
{
    const LoadReduction red = reduce_network(z, m, cfg, z_oc);
    if (i_a.size() != cfg.n())
        throw DimensionMismatch("loaded currents: i_A has wrong length");
    return -red.x * i_a;
}

/// E_ocF rows for the given reduction, from any (2P x G') pattern block.
inline CMatrix reduce_patterns(const CMatrix &e_oc, Index ports, const LoadReduction &red)
{
    const Index n = static_cast<Index>(red.perm.active.size());
    CMatrix out(2 * n, e_oc.cols());
    for (int pol = 0; pol < 2; ++pol)
    {
        const Index off = pol * ports;
        CMatrix rows = detail::take_rows(e_oc, red.perm.active, off);
        if (!red.perm.loaded.empty())
            rows.noalias() -= red.x.transpose() * detail::take_rows(e_oc, red.perm.loaded, off);
        out.middleRows(pol * n, n) = rows;
    }
    return out;
}

inline PatternSet open_circuit_feed_patterns(const EMDataset &ds, const GeometryConfig &cfg,
                                             const FeedNetworkConfig &net = {})
{
    const LoadReduction red = reduce_network(ds.z(), ds.feed_count(), cfg, net.z_oc);
    return PatternSet(ds.grid(), cfg.n(), reduce_patterns(ds.e_oc(), ds.port_count(), red));
}

inline CMatrix source_matrix(Index n, const FeedNetworkConfig &net)
{
    CMatrix z0 = CMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        z0(i, i) = net.source(i);
    return z0;
}

/// E_F = E_ocF (Z_0 + Z_F)^-1, with ports as pattern columns.
inline PatternSet coupled_patterns(const PatternSet &e_ocf, const CMatrix &z_f, const CMatrix &z0)
{
    const Index n = e_ocf.ports();
    if (z_f.rows() != n || z_f.cols() != n || z0.rows() != n || z0.cols() != n)
        throw DimensionMismatch("coupled patterns: impedance size does not match the port count");
    Eigen::PartialPivLU<CMatrix> lu((z0 + z_f).transpose());
    if (!(lu.rcond() > 1e-15))
        throw NumericalError("coupled patterns: Z_0 + Z_F is singular");
    CMatrix out(2 * n, e_ocf.grid().size());
    out.topRows(n) = lu.solve(CMatrix(e_ocf.theta_rows()));
    out.bottomRows(n) = lu.solve(CMatrix(e_ocf.phi_rows()));
    return PatternSet(e_ocf.grid(), n, std::move(out));
}

/// Radiated power integral of each pattern column, sum_g w_g |e_n(g)|^2.
inline RVector pattern_power(const PatternSet &e, Quadrature q)
{
    const RVector w = e.grid().weights(q);
    const RMatrix mag = e.data().cwiseAbs2();
    const Index n = e.ports();
    RVector out(n);
    for (Index i = 0; i < n; ++i)
        out(i) = mag.row(i).dot(w) + mag.row(n + i).dot(w);
    return out;
}

namespace detail
{
/// Efficiencies from per-port radiated integrals.
inline RVector efficiencies_from_power(const RVector &radiated, const CMatrix &z_f, const CMatrix &z0,
                                       EfficiencyMode mode)
{
    const Index n = z_f.rows();
    Eigen::PartialPivLU<CMatrix> lu(z0 + z_f);
    const CMatrix y = lu.solve(CMatrix::Identity(n, n)); // column n: currents for unit voltage at port n
    RVector lam(n);
    for (Index i = 0; i < n; ++i)
    {
        double denom = 0.0;
        if (mode == EfficiencyMode::AcceptedPower)
        {
            const CVector c = y.col(i);
            denom = 2.0 * kEta0 * c.dot(z_f * c).real();
        }
        else
        {
            denom = kEta0 * y(i, i).real();
        }
        if (!(denom > 0.0) || !std::isfinite(denom))
            throw NumericalError("efficiency: non-positive input power at active port " + std::to_string(i + 1) +
                                 " (non-physical configuration)");
        lam(i) = radiated(i) / denom;
    }
    return lam;
}
} // namespace detail

inline RVector radiation_efficiency(const PatternSet &e_f, const CMatrix &z0, const CMatrix &z_f,
                                    Quadrature q = Quadrature::SolidAngle,
                                    EfficiencyMode mode = EfficiencyMode::AcceptedPower)
{
    if (e_f.ports() != z_f.rows())
        throw DimensionMismatch("efficiency: pattern/impedance port counts differ");
    return detail::efficiencies_from_power(pattern_power(e_f, q), z_f, z0, mode);
}

/// Everything known about one geometry on one dataset.
struct ActiveNetwork
{
    std::string dataset_id;
    GeometryConfig config;
    CMatrix z_f;
    PatternSet e_ocf;
    PatternSet e_f;
    PatternSet e; // E_F Lambda^1/2, the patterns used for sensing
    RVector efficiencies;
    bool ill_conditioned = false;
};

namespace detail
{
inline PatternSet apply_efficiency(const PatternSet &e_f, const RVector &lam, const RVector &unit_scale)
{
    const Index n = e_f.ports();
    CMatrix d = e_f.data();
    for (Index i = 0; i < n; ++i)
    {
        const double s = std::sqrt(lam(i)) * unit_scale(i);
        d.row(i) *= s;
        d.row(n + i) *= s;
    }
    return PatternSet(e_f.grid(), n, std::move(d));
}
} // namespace detail

inline ActiveNetwork overall_patterns(const EMDataset &ds, const GeometryConfig &cfg, const FeedNetworkConfig &net = {})
{
    net.validate(cfg.n());
    const LoadReduction red = reduce_network(ds.z(), ds.feed_count(), cfg, net.z_oc);
    ActiveNetwork out;
    out.dataset_id = ds.id_hex();
    out.config = cfg;
    out.z_f = red.z_f;
    out.ill_conditioned = red.ill_conditioned;
    out.e_ocf = PatternSet(ds.grid(), cfg.n(), reduce_patterns(ds.e_oc(), ds.port_count(), red));
    const CMatrix z0 = source_matrix(cfg.n(), net);
    out.e_f = coupled_patterns(out.e_ocf, red.z_f, z0);
    const RVector radiated = pattern_power(out.e_f, net.quadrature);
    out.efficiencies = detail::efficiencies_from_power(radiated, red.z_f, z0, net.efficiency_mode);
    RVector scale = RVector::Ones(cfg.n());
    if (net.normalize_patterns)
        scale = (4.0 * kPi / radiated.array()).sqrt().matrix();
    out.e = detail::apply_efficiency(out.e_f, out.efficiencies, scale);
    return out;
}

/// Per-dataset precomputation for evaluating many geometries: the
/// quadrature Gram of all open-circuit patterns, so that radiated power of
/// any reduced pattern is a small quadratic form.
class NetworkModel
{
public:
    NetworkModel(const EMDataset &ds, Quadrature q = Quadrature::SolidAngle)
        : ds_(&ds), quadrature_(q), gram_(pattern_gram(ds.e_oc(), ds.grid(), q))
    {
    }

    const EMDataset &dataset() const { return *ds_; }
    Quadrature quadrature() const { return quadrature_; }
    const CMatrix &gram() const { return gram_; }

    /// Same as overall_patterns, but patterns are only formed on the
    /// grid points of `window`; efficiencies still cover the whole sphere.
    ActiveNetwork evaluate(const GeometryConfig &cfg, const FeedNetworkConfig &net, const GridBox &window) const
    {
        if (net.quadrature != quadrature_)
            throw InvalidArgument("network model was built for a different quadrature");
        net.validate(cfg.n());
        const EMDataset &ds = *ds_;
        const LoadReduction red = reduce_network(ds.z(), ds.feed_count(), cfg, net.z_oc);
        const Index n = cfg.n();
        const Index p = ds.port_count();

        // T = P_A - P_L X, as a (P x N) map from active currents to port currents.
        CMatrix t = CMatrix::Zero(p, n);
        for (Index i = 0; i < n; ++i)
            t(red.perm.active[static_cast<std::size_t>(i)] - 1, i) = 1.0;
        for (std::size_t l = 0; l < red.perm.loaded.size(); ++l)
            t.row(red.perm.loaded[l] - 1) = -red.x.row(static_cast<Index>(l));

        const CMatrix z0 = source_matrix(n, net);
        Eigen::PartialPivLU<CMatrix> lu(z0 + red.z_f);
        if (!(lu.rcond() > 1e-15))
            throw NumericalError("coupled patterns: Z_0 + Z_F is singular");
        const CMatrix y = lu.solve(CMatrix::Identity(n, n));
        const CMatrix ty = t * y;
        RVector radiated(n);
        for (Index i = 0; i < n; ++i)
            radiated(i) = ty.col(i).dot(gram_ * ty.col(i)).real();

        const AngleGrid sub = ds.grid().sub(window.it0, window.it1, window.ip0, window.ip1);
        CMatrix e_win(2 * p, sub.size());
        for (Index it = window.it0; it <= window.it1; ++it)
        {
            const Index src = ds.grid().index(it, window.ip0);
            const Index dst = (it - window.it0) * window.n_phi();
            e_win.middleCols(dst, window.n_phi()) = ds.e_oc().middleCols(src, window.n_phi());
        }

        ActiveNetwork out;
        out.dataset_id = ds.id_hex();
        out.config = cfg;
        out.z_f = red.z_f;
        out.ill_conditioned = red.ill_conditioned;
        out.e_ocf = PatternSet(sub, n, reduce_patterns(e_win, p, red));
        out.e_f = coupled_patterns(out.e_ocf, red.z_f, z0);
        out.efficiencies = detail::efficiencies_from_power(radiated, red.z_f, z0, net.efficiency_mode);
        RVector scale = RVector::Ones(n);
        if (net.normalize_patterns)
            scale = (4.0 * kPi / radiated.array()).sqrt().matrix();
        out.e = detail::apply_efficiency(out.e_f, out.efficiencies, scale);
        return out;
    }

private:
    const EMDataset *ds_;
    Quadrature quadrature_;
    CMatrix gram_;
};

} // namespace hrpa
