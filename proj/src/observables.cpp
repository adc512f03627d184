#include "cascade/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cascade {

double CorrelationMap::maxValue() const {
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

namespace {

FluxTrace expectationTrace(const Trajectory& traj, const ComplexMatrix& op, double scale) {
    FluxTrace out{traj.grid, {}};
    out.values.reserve(traj.states.size());
    for (const auto& rho : traj.states) {
        out.values.push_back(scale * rho.expectation(op).real());
    }
    return out;
}

// Trapezoid over indices [lo, hi] of a row of the map, spacing dt.
double trapezoidRow(const CorrelationMap& map, std::size_t row, std::size_t lo, std::size_t hi,
                    double dt) {
    if (hi <= lo) {
        return 0.0;
    }
    double sum = 0.5 * (map(row, lo) + map(row, hi));
    for (std::size_t j = lo + 1; j < hi; ++j) {
        sum += map(row, j);
    }
    return sum * dt;
}

double halfPlaneIntegral(const CorrelationMap& map, std::size_t first) {
    // Outer trapezoid in t over inner trapezoids in tau = t2 - t1 >= 0.
    const std::size_t last = map.size() - 1;
    const double dt = map.axis.dt();
    double sum = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
        const double w = (i == first || i == last) ? 0.5 : 1.0;
        sum += w * trapezoidRow(map, i, i, last, dt);
    }
    return sum * dt;
}

double trapezoid(std::span<const double> v, double dt) {
    if (v.size() < 2) {
        return 0.0;
    }
    double sum = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        sum += v[i];
    }
    return sum * dt;
}

std::vector<double> gaussianKernel(double fwhm, double dt) {
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(8.0 * sigma / dt));
    std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
    double total = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
        const double x = static_cast<double>(k) * dt / sigma;
        const double v = std::exp(-0.5 * x * x);
        w[static_cast<std::size_t>(k + half)] = v;
        total += v;
    }
    for (double& v : w) {
        v /= total;
    }
    return w;
}

// Zero-padded discrete convolution of `n` samples spaced `stride` apart.
void convolveStrided(const double* in, double* out, std::size_t n, std::size_t stride,
                     const std::vector<double>& kernel) {
    const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto len = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t i = 0; i < len; ++i) {
        double acc = 0.0;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-half, i - len + 1);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(half, i);
        for (std::ptrdiff_t k = lo; k <= hi; ++k) {
            acc += kernel[static_cast<std::size_t>(k + half)] *
                   in[static_cast<std::size_t>(i - k) * stride];
        }
        out[static_cast<std::size_t>(i) * stride] = acc;
    }
}

void requireFwhm(double fwhm) {
    if (!(fwhm >= 0.0) || !std::isfinite(fwhm)) {
        throw InvalidParameter("jitter FWHM must be a non-negative number");
    }
}

}  // namespace

FluxTrace fluxFirst(const Trajectory& traj, const SystemParams& params) {
    const std::size_t dim = traj.states.empty() ? 0 : traj.states.front().dim();
    const int n = dim == 4 ? 2 : 1;
    const ComplexMatrix number = embed(ops::sigmaPlus() * ops::sigmaMinus(), 1, n);
    return expectationTrace(traj, number, 0.5 * params.Gamma);
}

FluxTrace fluxSecond(const Trajectory& traj, const SystemParams& params) {
    if (!traj.states.empty() && traj.states.front().dim() != 4) {
        throw DimensionError("fluxSecond", traj.states.front().dim(), 4);
    }
    const ComplexMatrix s = collectiveJump(params);
    return expectationTrace(traj, s.adjoint() * s, 0.5 * params.Gamma);
}

TimeSeries restrictTo(const TimeSeries& series, const TimeGrid& axis) {
    const TimeGrid& g = series.grid;
    const double ratio = axis.dt() / g.dt();
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    const double offset = (axis.tStart() - g.tStart()) / g.dt();
    const auto first = static_cast<long long>(std::llround(offset));
    if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio ||
        std::abs(offset - static_cast<double>(first)) > 1e-9 * std::max(1.0, std::abs(offset)) ||
        first < 0 || static_cast<std::size_t>(first) + axis.steps() * stride > g.steps()) {
        throw InvalidParameter("restrictTo: axis does not lie on the series grid");
    }
    TimeSeries out{axis, {}};
    out.values.reserve(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i) {
        out.values.push_back(series.values[static_cast<std::size_t>(first) + i * stride]);
    }
    return out;
}

double integrate(const TimeSeries& series) { return trapezoid(series.values, series.grid.dt()); }

double g2Bar(const CorrelationMap& map, const FluxTrace& flux) {
    return g2BarGated(map, flux, map.axis.tStart());
}

double g2BarGated(const CorrelationMap& map, const FluxTrace& flux, double tStart) {
    if (!(flux.grid == map.axis) || flux.values.size() != map.size()) {
        throw InvalidParameter("g2: flux and map must share the same time grid");
    }
    const TimeGrid& axis = map.axis;
    const double tol = 1e-9 * axis.dt();
    if (tStart < axis.tStart() - tol || tStart > axis.tEnd() + tol) {
        std::ostringstream os;
        os << "g2: gate start " << tStart << " ps lies outside [" << axis.tStart() << ", "
           << axis.tEnd() << "]";
        throw InvalidParameter(os.str());
    }
    const std::size_t first = axis.nearestIndex(tStart);
    if (first >= axis.steps()) {
        throw UndefinedStatistics("g2: gate window is empty");
    }
    const double photons = trapezoid(std::span(flux.values).subspan(first), axis.dt());
    if (photons == 0.0) {
        throw UndefinedStatistics("g2: undefined statistics (zero photon number)");
    }
    return 2.0 * halfPlaneIntegral(map, first) / (photons * photons);
}

TimeSeries convolveJitter(const TimeSeries& series, double fwhm) {
    requireFwhm(fwhm);
    if (fwhm == 0.0) {
        return series;
    }
    const auto kernel = gaussianKernel(fwhm, series.grid.dt());
    TimeSeries out{series.grid, std::vector<double>(series.values.size())};
    convolveStrided(series.values.data(), out.values.data(), series.values.size(), 1, kernel);
    return out;
}

CorrelationMap convolveJitter(const CorrelationMap& map, double fwhm) {
    requireFwhm(fwhm);
    if (fwhm == 0.0) {
        return map;
    }
    const auto kernel = gaussianKernel(fwhm, map.axis.dt());
    const std::size_t n = map.size();
    CorrelationMap rows{map.axis, std::vector<double>(n * n)};
    for (std::size_t i = 0; i < n; ++i) {
        convolveStrided(&map.values[i * n], &rows.values[i * n], n, 1, kernel);
    }
    CorrelationMap out{map.axis, std::vector<double>(n * n)};
    for (std::size_t j = 0; j < n; ++j) {
        convolveStrided(&rows.values[j], &out.values[j], n, n, kernel);
    }
    return out;
}

FitResult fitMonoexponential(const TimeSeries& series, double ta, double tb) {
    const double tol = 1e-9 * series.grid.dt();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        const double t = series.grid.at(i);
        if (t < ta - tol || t > tb + tol) {
            continue;
        }
        const double v = series.values[i];
        if (!(v > 0.0)) {
            std::ostringstream os;
            os << "fit: non-positive value " << v << " at t = " << t << " ps";
            throw InvalidParameter(os.str());
        }
        points.emplace_back(t, std::log(v));
    }
    if (points.size() < 5) {
        throw InvalidParameter("fit: window holds fewer than 5 points");
    }
    // Centre times for conditioning.
    double tMean = 0.0;
    for (const auto& [t, y] : points) {
        tMean += t;
    }
    tMean /= static_cast<double>(points.size());
    for (const auto& [t, y] : points) {
        const double x = t - tMean;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const auto m = static_cast<double>(points.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    if (!(slope < 0.0)) {
        throw InvalidParameter("fit: data in window does not decay");
    }
    double ss = 0.0;
    for (const auto& [t, y] : points) {
        const double r = y - (intercept + slope * (t - tMean));
        ss += r * r;
    }
    return FitResult{std::exp(intercept - slope * tMean), -1.0 / slope, std::sqrt(ss / m)};
}

TimeSeries diagonal(const CorrelationMap& map) {
    TimeSeries out{map.axis, {}};
    out.values.reserve(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        out.values.push_back(map(i, i));
    }
    return out;
}

double visibility(double centralArea, double sideArea) {
    if (!(sideArea > 0.0)) {
        throw UndefinedStatistics("visibility: side-peak area must be positive");
    }
    return 1.0 - centralArea / sideArea;
}

double indistinguishability(double visibility, double g2) {
    if (!(g2 < 1.0)) {
        throw UndefinedStatistics("indistinguishability: g2 must be below 1");
    }
    return (visibility + g2) / (1.0 - g2);
}

}  // namespace cascade
