// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Single-snapshot received signal y = e_Theta s_Theta + e_Phi s_Phi + n,
// a deterministic maximum-likelihood grid estimator with the 2-vector s
// unknown, and a Monte-Carlo harness comparing its RMSE with the CRLB.
//
// SNR convention: average received signal power per port over the noise
// power per port, sigma^2 = |E^T s|^2 / (N snr).

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/core.hpp"
#include "hrpa/crlb.hpp"
#include "hrpa/optimizer.hpp"
#include "hrpa/parallel.hpp"
#include "hrpa/patterns.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

namespace hrpa
{

struct Snapshot
{
    CVector y;
    Angle truth;
    Eigen::Vector2cd s = Eigen::Vector2cd(1.0, 0.0);
    double noise_var = 0.0;
};

namespace detail
{
inline CVector steering_at(const PatternSet &ps, const Angle &a)
{
    const auto g = ps.grid().locate(a);
    if (!g)
        throw CoverageError("angle (" + format_value(a.theta_deg) + ", " + format_value(a.phi_deg) +
                            ") is not a point of grid " + ps.grid().describe());
    return ps.steering(*g);
}

template <FieldSource S> CVector steering_at(const S &src, const Angle &a) { return src.steering(a.theta_deg, a.phi_deg); }

template <class Src> Index port_count(const Src &src) { return static_cast<Index>(src.ports()); }
} // namespace detail

/// Noisy snapshot; snr_linear = +inf gives the noiseless model.
template <class Src>
Snapshot simulate_snapshot(const Src &src, const Angle &angle, const Eigen::Vector2cd &s, double snr_linear,
                           std::mt19937_64 &rng)
{
    if (!(s.norm() > 0.0))
        throw InvalidArgument("snapshot: source amplitude vector must be nonzero");
    if (!(snr_linear > 0.0))
        throw InvalidArgument("snapshot: SNR must be positive");
    const CVector a = detail::steering_at(src, angle);
    const Index n = a.size() / 2;
    Snapshot snap;
    snap.truth = angle;
    snap.s = s;
    snap.y = a.head(n) * s(0) + a.tail(n) * s(1);
    snap.noise_var = std::isinf(snr_linear) ? 0.0 : snap.y.squaredNorm() / (static_cast<double>(n) * snr_linear);
    if (snap.noise_var > 0.0)
    {
        std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * snap.noise_var));
        for (Index i = 0; i < n; ++i)
            snap.y(i) += Complex(gauss(rng), gauss(rng));
    }
    return snap;
}

template <class Src>
Snapshot simulate_snapshot(const Src &src, const Angle &angle, const Eigen::Vector2cd &s, double snr_linear,
                           std::uint64_t seed)
{
    std::mt19937_64 rng = stream_rng(seed, 0);
    return simulate_snapshot(src, angle, s, snr_linear, rng);
}

struct MLEstimate
{
    Angle angle;
    Index grid_index = -1; // within the searched grid
    double metric = 0.0;
    std::size_t skipped = 0; // candidates with an all-zero pattern matrix
};

/// Grid-search ML estimator over the points of a PatternSet within an area.
/// Candidate bases are orthonormalised once, so repeated estimates are cheap.
class MLEstimator
{
public:
    MLEstimator(const PatternSet &ps, const SensingArea &area) : grid_(ps.grid()), box_(area_box(ps.grid(), area))
    {
        const Index n = ps.ports();
        n_ = n;
        q1_.resize(n, box_.size());
        q2_.resize(n, box_.size());
        rank_.resize(box_.size());
        const double scale = ps.data().cwiseAbs().maxCoeff();
        const double tol = 1e-12 * std::max(scale, 1e-300);
        for (Index k = 0; k < box_.size(); ++k)
        {
            const Index g = grid_.index(box_.it0 + k / box_.n_phi(), box_.ip0 + k % box_.n_phi());
            CVector a = ps.data().col(g).head(n);
            CVector b = ps.data().col(g).tail(n);
            if (a.norm() < b.norm())
                std::swap(a, b);
            int r = 0;
            q1_.col(k).setZero();
            q2_.col(k).setZero();
            if (a.norm() > tol * std::sqrt(static_cast<double>(n)))
            {
                q1_.col(k) = a / a.norm();
                r = 1;
                CVector b2 = b - q1_.col(k) * q1_.col(k).dot(b);
                if (b2.norm() > tol * std::sqrt(static_cast<double>(n)) && b2.norm() > 1e-10 * b.norm())
                {
                    q2_.col(k) = b2 / b2.norm();
                    r = 2;
                }
            }
            rank_(k) = r;
        }
    }

    const AngleGrid &grid() const { return grid_; }
    const GridBox &box() const { return box_; }

    MLEstimate estimate(const CVector &y, bool refine) const
    {
        if (y.size() != n_)
            throw DimensionMismatch("ml estimate: snapshot length does not match the port count");
        const RVector m = metrics(y);
        MLEstimate est;
        double best = -1.0;
        for (Index k = 0; k < box_.size(); ++k)
        {
            if (rank_(k) == 0)
            {
                ++est.skipped;
                continue;
            }
            if (m(k) > best)
            {
                best = m(k);
                est.grid_index = k;
            }
        }
        if (est.grid_index < 0)
            throw NumericalError("ml estimate: every candidate has an all-zero pattern");
        est.metric = best;
        const Index kt = est.grid_index / box_.n_phi(), kp = est.grid_index % box_.n_phi();
        est.angle = {grid_.theta_deg(box_.it0 + kt), grid_.phi_deg(box_.ip0 + kp)};
        if (refine)
        {
            auto at = [&](Index t, Index p) { return m(t * box_.n_phi() + p); };
            if (kt > 0 && kt + 1 < box_.n_theta())
                est.angle.theta_deg += grid_.step() * vertex(at(kt - 1, kp), best, at(kt + 1, kp));
            if (kp > 0 && kp + 1 < box_.n_phi())
                est.angle.phi_deg += grid_.step() * vertex(at(kt, kp - 1), best, at(kt, kp + 1));
        }
        return est;
    }

private:
    RVector metrics(const CVector &y) const
    {
        const CVector p1 = q1_.adjoint() * y;
        const CVector p2 = q2_.adjoint() * y;
        return (p1.cwiseAbs2() + p2.cwiseAbs2()).eval();
    }

    // Offset of the parabola vertex through three equally spaced samples.
    static double vertex(double lo, double mid, double hi)
    {
        const double den = lo - 2.0 * mid + hi;
        if (!(den < 0.0))
            return 0.0;
        return std::clamp(0.5 * (lo - hi) / den, -0.5, 0.5);
    }

    AngleGrid grid_;
    GridBox box_;
    Index n_ = 0;
    CMatrix q1_, q2_;
    Eigen::VectorXi rank_;
};

inline MLEstimate ml_estimate(const CVector &y, const PatternSet &ps, const SensingArea &area, bool refine)
{
    return MLEstimator(ps, area).estimate(y, refine);
}

struct MonteCarloOptions
{
    double search_halfwidth_deg = 10.0; // search window around the truth
    double field_step_deg = 0.1;        // sampling step when the source is analytic
    double fd_step_deg = 0.1;           // CRLB derivative step for analytic sources
    bool refine = true;
    bool random_polarization = false;
    double outlier_threshold_deg = 1.0;
    unsigned threads = 1;
};

struct MonteCarloRecord
{
    Angle truth;
    double snr_linear = 1.0;
    int trials = 0;
    double rmse_theta = 0.0, rmse_phi = 0.0; // rad
    double crlb_theta = 0.0, crlb_phi = 0.0; // sqrt of c_tt, c_pp, rad
    double mse_theta = 0.0, mse_phi = 0.0;
    double se_mse_theta = 0.0, se_mse_phi = 0.0; // standard error of the MSE estimates
    double outlier_fraction = 0.0;
};

struct MonteCarloReport
{
    std::vector<MonteCarloRecord> records;
    std::uint64_t seed = 0;
    MonteCarloOptions options;
};

namespace detail
{
inline SensingArea search_window(const Angle &t, double half, const AngleGrid *grid)
{
    SensingArea a{std::max(0.0, t.theta_deg - half), std::min(180.0, t.theta_deg + half), t.phi_deg - half,
                  t.phi_deg + half};
    if (grid)
    {
        auto snap = [&](double v, double start, double step, Index n, bool up) {
            double k = (v - start) / step;
            k = up ? std::floor(k + 1e-9) : std::ceil(k - 1e-9);
            k = std::clamp(k, 0.0, static_cast<double>(n - 1));
            return start + k * step;
        };
        a.theta_min = snap(a.theta_min, grid->theta_start(), grid->step(), grid->n_theta(), false);
        a.theta_max = snap(a.theta_max, grid->theta_start(), grid->step(), grid->n_theta(), true);
        a.phi_min = snap(a.phi_min, grid->phi_start(), grid->step(), grid->n_phi(), false);
        a.phi_max = snap(a.phi_max, grid->phi_start(), grid->step(), grid->n_phi(), true);
    }
    return a;
}
} // namespace detail

/// RMSE of the ML estimator against the CRLB at each (angle, snr).
/// Trial t of (angle i, snr j) draws from the stream (seed, i, j, t).
template <class Src>
MonteCarloReport monte_carlo_rmse(const Src &src, const std::vector<Angle> &angles,
                                  const std::vector<double> &snr_linear, int trials, std::uint64_t seed,
                                  const MonteCarloOptions &opts = {})
{
    if (trials < 100)
        throw InvalidArgument("monte carlo: at least 100 trials are required");
    MonteCarloReport rep;
    rep.seed = seed;
    rep.options = opts;
    for (std::size_t ai = 0; ai < angles.size(); ++ai)
    {
        const Angle truth = angles[ai];
        std::optional<PatternSet> sampled;
        const PatternSet *search = nullptr;
        SensingArea window;
        if constexpr (std::is_same_v<Src, PatternSet>)
        {
            search = &src;
            window = detail::search_window(truth, opts.search_halfwidth_deg, &src.grid());
        }
        else
        {
            window = detail::search_window(truth, opts.search_halfwidth_deg, nullptr);
            sampled = src.sample(AngleGrid(window.theta_min, window.theta_max, window.phi_min, window.phi_max,
                                           opts.field_step_deg));
            search = &*sampled;
        }
        const MLEstimator est(*search, window);

        for (std::size_t si = 0; si < snr_linear.size(); ++si)
        {
            const double snr = snr_linear[si];
            CRLBResult bound;
            if constexpr (std::is_same_v<Src, PatternSet>)
                bound = crlb_matrix(src, truth, std::isinf(snr) ? 1.0 : snr, 0.0);
            else
                bound = crlb_matrix(src, truth, std::isinf(snr) ? 1.0 : snr, opts.fd_step_deg);

            std::vector<double> et(static_cast<std::size_t>(trials)), ep(static_cast<std::size_t>(trials));
            parallel_for(static_cast<std::size_t>(trials), opts.threads, [&](std::size_t t) {
                auto rng = stream_rng(seed, ai, si, t);
                Eigen::Vector2cd s(1.0, 0.0);
                if (opts.random_polarization)
                {
                    std::normal_distribution<double> g(0.0, 1.0);
                    s = Eigen::Vector2cd(Complex(g(rng), g(rng)), Complex(g(rng), g(rng)));
                    s /= s.norm();
                }
                const Snapshot snap = simulate_snapshot(src, truth, s, snr, rng);
                const MLEstimate e = est.estimate(snap.y, opts.refine);
                et[t] = deg2rad(e.angle.theta_deg - truth.theta_deg);
                ep[t] = deg2rad(e.angle.phi_deg - truth.phi_deg);
            });

            MonteCarloRecord r;
            r.truth = truth;
            r.snr_linear = snr;
            r.trials = trials;
            double st = 0, sp = 0, st2 = 0, sp2 = 0;
            int outliers = 0;
            const double thr = deg2rad(opts.outlier_threshold_deg);
            for (int t = 0; t < trials; ++t)
            {
                const double a = et[static_cast<std::size_t>(t)] * et[static_cast<std::size_t>(t)];
                const double b = ep[static_cast<std::size_t>(t)] * ep[static_cast<std::size_t>(t)];
                st += a;
                sp += b;
                st2 += a * a;
                sp2 += b * b;
                if (std::abs(et[static_cast<std::size_t>(t)]) > thr || std::abs(ep[static_cast<std::size_t>(t)]) > thr)
                    ++outliers;
            }
            const double n = trials;
            r.mse_theta = st / n;
            r.mse_phi = sp / n;
            r.rmse_theta = std::sqrt(r.mse_theta);
            r.rmse_phi = std::sqrt(r.mse_phi);
            r.se_mse_theta = std::sqrt(std::max(0.0, st2 / n - r.mse_theta * r.mse_theta) / n);
            r.se_mse_phi = std::sqrt(std::max(0.0, sp2 / n - r.mse_phi * r.mse_phi) / n);
            r.crlb_theta = std::isinf(snr) ? 0.0 : std::sqrt(bound.c_tt());
            r.crlb_phi = std::isinf(snr) ? 0.0 : std::sqrt(bound.c_pp());
            r.outlier_fraction = outliers / n;
            rep.records.push_back(r);
        }
    }
    return rep;
}

inline void write_montecarlo_csv(std::ostream &out, const MonteCarloReport &rep)
{
    out << "theta_deg,phi_deg,snr_db,trials,rmse_theta_rad,rmse_phi_rad,crlb_theta_rad,crlb_phi_rad\n";
    for (const auto &r : rep.records)
        out << format_value(r.truth.theta_deg) << ',' << format_value(r.truth.phi_deg) << ','
            << format_value(linear_to_db(r.snr_linear)) << ',' << r.trials << ',' << format_value(r.rmse_theta) << ','
            << format_value(r.rmse_phi) << ',' << format_value(r.crlb_theta) << ',' << format_value(r.crlb_phi)
            << '\n';
}

} // namespace hrpa
