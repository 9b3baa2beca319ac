// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/core.hpp"
#include "hrpa/patterns.hpp"

#include <Eigen/Eigenvalues>

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hrpa
{

/// Position (mm) and unit current direction of one port's equivalent dipole.
struct PortGeometry
{
    Eigen::Vector3d position_mm = Eigen::Vector3d::Zero();
    Eigen::Vector3d direction = Eigen::Vector3d::UnitX();
};

/// Square pixel array over a ground plane.
///
/// The ground plane is the y-z plane (x = 0) and the pixel layer sits at
/// x = height, so broadside is theta = 90, phi = 0. Feed ports connect each
/// pixel center to ground (ports 1..M, row-major); loaded ports bridge each
/// pair of adjacent pixels (ports M+1..M+Q: all row-internal edges
/// row-major, then all column-internal edges row-major).
struct PortLayout
{
    int pixel_rows = 5;
    int pixel_cols = 5;
    double pixel_side_mm = 12.0;
    double substrate_side_mm = 62.5;
    double height_mm = 12.5;
    double frequency_hz = 2.4e9;

    Index feed_count() const { return static_cast<Index>(pixel_rows) * pixel_cols; }
    Index loaded_count() const
    {
        return static_cast<Index>(pixel_rows) * (pixel_cols - 1) + static_cast<Index>(pixel_cols) * (pixel_rows - 1);
    }
    Index port_count() const { return feed_count() + loaded_count(); }

    double pitch_y_mm() const { return substrate_side_mm / pixel_cols; }
    double pitch_z_mm() const { return substrate_side_mm / pixel_rows; }
    double wavelength_mm() const { return kSpeedOfLight / frequency_hz * 1e3; }
    double wavenumber_per_mm() const { return 2.0 * kPi / wavelength_mm(); }

    void validate() const
    {
        if (pixel_rows < 1 || pixel_cols < 1)
            throw InvalidArgument("layout: pixel array must have at least one row and column");
        if (!(substrate_side_mm > 0.0) || !(pixel_side_mm > 0.0) || !(height_mm > 0.0))
            throw InvalidArgument("layout: dimensions must be positive");
        if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
            throw InvalidArgument("layout: frequency must be positive");
        if (pixel_side_mm > std::min(pitch_y_mm(), pitch_z_mm()) + 1e-12)
            throw InvalidArgument("layout: pixels of side " + std::to_string(pixel_side_mm) +
                                  " mm do not fit the substrate pitch");
    }

    double pixel_y_mm(int col) const { return -0.5 * substrate_side_mm + (col + 0.5) * pitch_y_mm(); }
    double pixel_z_mm(int row) const { return 0.5 * substrate_side_mm - (row + 0.5) * pitch_z_mm(); }

    std::vector<PortGeometry> ports() const
    {
        std::vector<PortGeometry> out;
        out.reserve(static_cast<std::size_t>(port_count()));
        for (int r = 0; r < pixel_rows; ++r)
            for (int c = 0; c < pixel_cols; ++c)
                out.push_back({{0.5 * height_mm, pixel_y_mm(c), pixel_z_mm(r)}, Eigen::Vector3d::UnitX()});
        for (int r = 0; r < pixel_rows; ++r)
            for (int c = 0; c + 1 < pixel_cols; ++c)
                out.push_back({{height_mm, 0.5 * (pixel_y_mm(c) + pixel_y_mm(c + 1)), pixel_z_mm(r)},
                               Eigen::Vector3d::UnitY()});
        for (int r = 0; r + 1 < pixel_rows; ++r)
            for (int c = 0; c < pixel_cols; ++c)
                out.push_back({{height_mm, pixel_y_mm(c), 0.5 * (pixel_z_mm(r) + pixel_z_mm(r + 1))},
                               Eigen::Vector3d::UnitZ()});
        return out;
    }

    friend bool operator==(const PortLayout &, const PortLayout &) = default;
};

/// Parameters of the coupled short-dipole stand-in for full-wave data.
/// Unset lengths default to the layout height (feeds) and pixel pitch (loads).
struct DipoleModelParams
{
    std::optional<double> feed_length_mm;
    std::optional<double> loaded_length_mm;
    double feed_self_reactance = -120.0;    // ohms
    double loaded_self_reactance = -80.0;   // ohms
    double mutual_reactance_scale = 30.0;   // ohms, multiplies -cos(kr)/(kr)
    double resistance_floor = 0.01;         // ohms added to every diagonal entry of R
    double reactance_jitter = 0.0;          // std-dev (ohms) of seeded self-reactance perturbation
    bool ground_plane = true;

    friend bool operator==(const DipoleModelParams &, const DipoleModelParams &) = default;
};

/// Impedance matrix and open-circuit patterns of all M+Q ports.
///
/// E_oc has the same (2P x G) layout as PatternSet::data(). The object is
/// immutable once built and may be shared across threads.
class EMDataset
{
public:
    EMDataset(PortLayout layout, AngleGrid grid, CMatrix z, CMatrix e_oc, std::string provenance,
              std::optional<DipoleModelParams> model = std::nullopt)
        : layout_(std::move(layout)), grid_(std::move(grid)), z_(std::move(z)), e_oc_(std::move(e_oc)),
          provenance_(std::move(provenance)), model_(std::move(model))
    {
        const Index p = layout_.port_count();
        if (z_.rows() != p || z_.cols() != p)
            throw DimensionMismatch("dataset: Z is " + std::to_string(z_.rows()) + "x" + std::to_string(z_.cols()) +
                                    " but the layout declares " + std::to_string(p) + " ports");
        if (e_oc_.rows() != 2 * p || e_oc_.cols() != grid_.size())
            throw DimensionMismatch("dataset: E_oc is " + std::to_string(e_oc_.rows()) + "x" +
                                    std::to_string(e_oc_.cols()) + ", expected " + std::to_string(2 * p) + "x" +
                                    std::to_string(grid_.size()));
        Fnv1a h;
        h.update(z_.data(), sizeof(Complex) * static_cast<std::size_t>(z_.size()));
        h.update(e_oc_.data(), sizeof(Complex) * static_cast<std::size_t>(e_oc_.size()));
        h.update(grid_.describe());
        id_ = h.value();
        id_hex_ = h.hex();
    }

    const PortLayout &layout() const { return layout_; }
    const AngleGrid &grid() const { return grid_; }
    const CMatrix &z() const { return z_; }
    const CMatrix &e_oc() const { return e_oc_; }
    const std::string &provenance() const { return provenance_; }
    const std::optional<DipoleModelParams> &model() const { return model_; }

    Index feed_count() const { return layout_.feed_count(); }
    Index loaded_count() const { return layout_.loaded_count(); }
    Index port_count() const { return layout_.port_count(); }

    std::uint64_t id() const { return id_; }
    const std::string &id_hex() const { return id_hex_; }

private:
    PortLayout layout_;
    AngleGrid grid_;
    CMatrix z_;
    CMatrix e_oc_;
    std::string provenance_;
    std::optional<DipoleModelParams> model_;
    std::uint64_t id_ = 0;
    std::string id_hex_;
};

struct ValidationTolerances
{
    double symmetry_abs = 1e-9;  // ohms
    double symmetry_rel = 1e-12; // of max|Z|
    double passivity_rel = 1e-10; // min eig(Re Z) >= -passivity_rel * max eig
};

struct ValidationReport
{
    double symmetry_residual = 0.0; // max |Z - Z^T|
    double min_eig_r = 0.0;
    double max_eig_r = 0.0;
    bool z_finite = true;
    bool patterns_finite = true;
    bool symmetric = true;
    bool passive = true;

    bool ok() const { return z_finite && patterns_finite && symmetric && passive; }

    std::string summary() const
    {
        std::ostringstream s;
        s.precision(4);
        s << "reciprocity  max|Z-Z^T| = " << symmetry_residual << (symmetric ? "  pass" : "  FAIL") << '\n'
          << "passivity    eig(Re Z) in [" << min_eig_r << ", " << max_eig_r << "]" << (passive ? "  pass" : "  FAIL")
          << '\n'
          << "finiteness   Z " << (z_finite ? "ok" : "non-finite") << ", E_oc "
          << (patterns_finite ? "ok" : "non-finite") << ((z_finite && patterns_finite) ? "  pass" : "  FAIL") << '\n';
        return s.str();
    }
};

inline ValidationReport validate_impedance(const CMatrix &z, const ValidationTolerances &tol = {})
{
    ValidationReport rep;
    rep.z_finite = z.allFinite();
    if (!rep.z_finite)
    {
        rep.symmetric = false;
        rep.passive = false;
        return rep;
    }
    rep.symmetry_residual = z.size() ? (z - z.transpose()).cwiseAbs().maxCoeff() : 0.0;
    const double zmax = z.size() ? z.cwiseAbs().maxCoeff() : 0.0;
    rep.symmetric = rep.symmetry_residual <= tol.symmetry_abs + tol.symmetry_rel * zmax;

    const RMatrix r = z.real();
    const RMatrix rs = 0.5 * (r + r.transpose());
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(rs, Eigen::EigenvaluesOnly);
    rep.min_eig_r = eig.eigenvalues().minCoeff();
    rep.max_eig_r = eig.eigenvalues().maxCoeff();
    rep.passive = rep.min_eig_r >= -tol.passivity_rel * std::max(std::abs(rep.max_eig_r), 0.0);
    return rep;
}

/// Reciprocity, passivity and finiteness checks; never throws on bad data.
inline ValidationReport validate_dataset(const EMDataset &ds, const ValidationTolerances &tol = {})
{
    ValidationReport rep = validate_impedance(ds.z(), tol);
    rep.patterns_finite = ds.e_oc().allFinite();
    return rep;
}

} // namespace hrpa
