// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/core.hpp"

#include <string>
#include <utility>

namespace hrpa
{

/// Dual-polarised far-field patterns of N ports sampled on an AngleGrid.
///
/// Storage is a (2N x G) matrix whose column g is the stacked steering
/// vector at grid point g: rows [0, N) hold the Theta components of ports
/// 1..N and rows [N, 2N) the Phi components. Immutable after construction.
class PatternSet
{
public:
    PatternSet() = default;

    PatternSet(AngleGrid grid, Index ports, CMatrix data) : grid_(std::move(grid)), ports_(ports), data_(std::move(data))
    {
        if (ports_ < 1)
            throw InvalidArgument("pattern set needs at least one port");
        if (data_.rows() != 2 * ports_ || data_.cols() != grid_.size())
            throw DimensionMismatch("pattern set: data is " + std::to_string(data_.rows()) + "x" +
                                    std::to_string(data_.cols()) + ", expected " + std::to_string(2 * ports_) + "x" +
                                    std::to_string(grid_.size()));
    }

    const AngleGrid &grid() const { return grid_; }
    Index ports() const { return ports_; }
    const CMatrix &data() const { return data_; }

    auto theta_rows() const { return data_.topRows(ports_); }
    auto phi_rows() const { return data_.bottomRows(ports_); }

    /// Stacked steering vector [e_Theta; e_Phi] at grid point g.
    auto steering(Index g) const { return data_.col(g); }

    Complex theta(Index port, Index g) const { return data_(port, g); }
    Complex phi(Index port, Index g) const { return data_(ports_ + port, g); }

    bool all_finite() const { return data_.allFinite(); }

    /// Patterns multiplied by a complex constant.
    PatternSet scaled(Complex alpha) const { return PatternSet(grid_, ports_, data_ * alpha); }

    /// Ports of `a` followed by ports of `b` (same grid).
    static PatternSet concat(const PatternSet &a, const PatternSet &b)
    {
        if (!a.grid().same_as(b.grid()))
            throw DimensionMismatch("pattern concat: grids differ");
        const Index n = a.ports() + b.ports();
        CMatrix d(2 * n, a.grid().size());
        d.topRows(a.ports()) = a.theta_rows();
        d.middleRows(a.ports(), b.ports()) = b.theta_rows();
        d.middleRows(n, a.ports()) = a.phi_rows();
        d.bottomRows(b.ports()) = b.phi_rows();
        return PatternSet(a.grid(), n, std::move(d));
    }

private:
    AngleGrid grid_;
    Index ports_ = 0;
    CMatrix data_;
};

} // namespace hrpa
