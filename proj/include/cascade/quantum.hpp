#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "cascade/linalg.hpp"

namespace cascade {

class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Rates in 1/ps, times in ps. Defaults are the fitted quantum-dot values:
/// lifetime 227 ps, gamma_d = 0.035 Gamma, B = 1.3e-4 / Gamma, 5% reflection.
struct SystemParams {
    double Gamma = 1.0 / 227.0;
    double gamma_d = 0.035 / 227.0;
    double B = 1.3e-4 * 227.0;
    double delta_L = 0.0;
    double eta_re = 0.05;
    double eta_loss_prime = 1.0;
    double jitter_fwhm = 60.0;

    /// Fraction of the first emitter's output that reaches the second one.
    double etaLoss() const { return (1.0 - eta_re) * eta_loss_prime; }

    void validate() const;
};

/// Gaussian drive with pulse area in radians.
struct PulseSpec {
    double area = 3.14159265358979323846;
    double tau_p = 25.0;
    double t_c = 200.0;

    void validate() const;
};

/// Uniform grid t_start, t_start + dt, ..., t_end.
class TimeGrid {
public:
    TimeGrid(double tStart, double tEnd, double dt);

    double tStart() const { return t_start_; }
    double tEnd() const { return t_end_; }
    double dt() const { return dt_; }
    std::size_t steps() const { return steps_; }
    std::size_t size() const { return steps_ + 1; }
    double at(std::size_t i) const { return t_start_ + static_cast<double>(i) * dt_; }

    /// Index of the grid point nearest to t, clamped to the grid.
    std::size_t nearestIndex(double t) const;

    bool operator==(const TimeGrid&) const = default;

private:
    double t_start_;
    double t_end_;
    double dt_;
    std::size_t steps_;
};

/// Hermitian, unit-trace state of one (dim 2) or two (dim 4) emitters.
/// Positivity is not enforced at construction; see minEigenvalue().
class DensityMatrix {
public:
    explicit DensityMatrix(ComplexMatrix m);

    const ComplexMatrix& matrix() const { return m_; }
    std::size_t dim() const { return m_.dim(); }
    double minEigenvalue() const;

    /// Tr(op * rho).
    cplx expectation(const ComplexMatrix& op) const;

private:
    ComplexMatrix m_;
};

namespace ops {

// Basis |g> = 0, |e> = 1.
ComplexMatrix sigmaMinus();  // |g><e|
ComplexMatrix sigmaPlus();   // |e><g|
ComplexMatrix sigmaZ();      // |e><e| - |g><g|
ComplexMatrix sigmaX();
ComplexMatrix identity2();

}  // namespace ops

/// Place a single-emitter operator on factor `which` (1-based) of an
/// n-emitter space ordered emitter 1 (x) emitter 2.
ComplexMatrix embed(const ComplexMatrix& op, int which, int n);

/// Rabi frequency of the Gaussian drive, normalized so its integral is the area.
double gaussianRabi(const PulseSpec& p, double t);

/// Weight of emitter 1 in the detected output of the cascaded pair.
double collectiveCoefficient(const SystemParams& params);

/// S_- = (sqrt(eta_loss) - sqrt(eta_re)) sigma_-^(1) + sigma_-^(2).
ComplexMatrix collectiveJump(const SystemParams& params);

DensityMatrix groundState(int n);

}  // namespace cascade
