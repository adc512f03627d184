#pragma once

#include <cstddef>
#include <vector>

#include "cascade/quantum.hpp"

namespace cascade {

/// Real samples on a uniform time grid.
struct TimeSeries {
    TimeGrid grid;
    std::vector<double> values;
};

/// Photon flux, 1/ps.
using FluxTrace = TimeSeries;

/// G2(t1, t2) in 1/ps^2 on a square grid shared by both time axes.
/// Row index is t1, column index is t2.
struct CorrelationMap {
    TimeGrid axis;
    std::vector<double> values;

    std::size_t size() const { return axis.size(); }
    double operator()(std::size_t i, std::size_t j) const { return values[i * axis.size() + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * axis.size() + j]; }
    double maxValue() const;
};

}  // namespace cascade
