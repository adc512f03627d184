#pragma once

#include <stdexcept>

#include "cascade/lindblad.hpp"
#include "cascade/series.hpp"

namespace cascade {

/// Statistics that cannot be formed, e.g. a vanishing photon number.
class UndefinedStatistics : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// (Gamma / 2) <s+ s-> of the laser-driven emitter. Accepts the single
/// (dim 2) or the cascaded (dim 4, emitter 1) trajectory.
FluxTrace fluxFirst(const Trajectory& traj, const SystemParams& params);

/// (Gamma / 2) <S+ S-> with S- the collective output jump. Needs dim 4.
FluxTrace fluxSecond(const Trajectory& traj, const SystemParams& params);

/// Samples of `series` at the points of `axis`, which must lie on the series grid.
TimeSeries restrictTo(const TimeSeries& series, const TimeGrid& axis);

/// Trapezoidal integral.
double integrate(const TimeSeries& series);

/// Time-averaged zero-delay correlation: twice the t2 >= t1 half of the map
/// integral over the squared photon number. `flux` must share the map axis.
double g2Bar(const CorrelationMap& map, const FluxTrace& flux);

/// g2Bar with both detection times restricted to t >= tStart, snapped to the
/// nearest grid point.
double g2BarGated(const CorrelationMap& map, const FluxTrace& flux, double tStart);

/// Convolution with a unit-sum Gaussian kernel of the given FWHM; samples
/// outside the grid are treated as zero. fwhm = 0 is the identity.
TimeSeries convolveJitter(const TimeSeries& series, double fwhm);
CorrelationMap convolveJitter(const CorrelationMap& map, double fwhm);

struct FitResult {
    double amplitude = 0.0;  // value extrapolated to t = 0
    double tau = 0.0;        // ps
    double rmsResidual = 0.0;  // of log(values)
};

/// Least-squares line through log(values) over grid points in [ta, tb].
FitResult fitMonoexponential(const TimeSeries& series, double ta, double tb);

/// G2(t, t).
TimeSeries diagonal(const CorrelationMap& map);

/// Raw HOM visibility 1 - A0 / A1.
double visibility(double centralArea, double sideArea);

/// (V + g2) / (1 - g2).
double indistinguishability(double visibility, double g2);

}  // namespace cascade
