#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/linalg.hpp"
#include "cascade/quantum.hpp"
#include "cascade/series.hpp"

namespace cascade {

/// Raised when the integrator produces a state that is clearly not positive.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// D[x] rho = x rho x^dag - (x^dag x rho + rho x^dag x) / 2.
ComplexMatrix dissipator(const ComplexMatrix& x, const ComplexMatrix& rho);

/// Time-dependent generator rho -> d rho / dt for either the laser-driven
/// emitter alone (dim 2) or the cascaded pair (dim 4) in which emitter 1's
/// output drives emitter 2.
class Liouvillian {
public:
    enum class Kind { Single, Cascaded };

    Liouvillian(Kind kind, SystemParams params, PulseSpec pulse);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return kind_ == Kind::Single ? 2 : 4; }
    const SystemParams& params() const { return params_; }
    const PulseSpec& pulse() const { return pulse_; }

    double rabi(double t) const { return gaussianRabi(pulse_, t); }

    /// d rho / dt, evaluated term by term from the operator form.
    ComplexMatrix operator()(double t, const ComplexMatrix& rho) const;

    /// Same generator acting on the row-major vectorized state through the
    /// precomputed superoperator L0 + Omega L1 + Omega^2 L2.
    void apply(double t, std::span<const cplx> rho, std::span<cplx> out) const;

private:
    struct Channel {
        ComplexMatrix x;
        ComplexMatrix xdag;
        ComplexMatrix xdagx;
    };

    // Adds rate * D[x] rho to out.
    static void addDissipator(ComplexMatrix& out, double rate, const Channel& c,
                              const ComplexMatrix& rho);

    ComplexMatrix applyAt(double omega, const ComplexMatrix& rho) const;

    Kind kind_;
    SystemParams params_;
    PulseSpec pulse_;

    ComplexMatrix drive_;   // (sigma_+ + sigma_-) / 2 on emitter 1
    ComplexMatrix detune_;  // sigma_z / 2 summed over emitters
    Channel decay1_;
    Channel dephase1_;
    std::optional<Channel> decay2_;
    std::optional<Channel> dephase2_;
    ComplexMatrix lower1_, raise1_, lower2_, raise2_;
    double cascadeRate_ = 0.0;

    // Superoperator coefficients of Omega^0, Omega^1, Omega^2.
    std::vector<cplx> super0_, super1_, super2_;
};

/// Laser-driven single emitter: -i[H, rho] + Gamma D[s-] + (gamma_d + B Omega^2) D[sz].
Liouvillian liouvillianSingle(const SystemParams& params, const PulseSpec& pulse);

/// Cascaded pair: driven emitter 1, undriven emitter 2, one-way coupling of
/// strength sqrt(eta_loss) Gamma / 2.
Liouvillian liouvillianCascaded(const SystemParams& params, const PulseSpec& pulse);

/// One classic fourth-order Runge-Kutta step from t to t + h.
ComplexMatrix rk4Step(const Liouvillian& L, double t, const ComplexMatrix& rho, double h);

struct Trajectory {
    TimeGrid grid;
    std::vector<DensityMatrix> states;
    double minEigenvalue = 0.0;  // over all stored states
    double maxTraceDrift = 0.0;
};

/// Integrates rho0 (given at grid.tStart()) over the grid with fixed-step RK4,
/// symmetrizing to (rho + rho^dag)/2 after every step. Throws IntegrationError
/// if a state develops an eigenvalue below -1e-6.
Trajectory propagate(const Liouvillian& L, const DensityMatrix& rho0, const TimeGrid& grid);

/// Two-time correlation weight * Tr(J^dag J U(t1 -> t2)[J rho(t1) J^dag]) by
/// quantum regression under the same time-dependent generator. `axis` is the
/// output grid; integration uses `step`, which must divide axis.dt(). The
/// lower triangle is filled by symmetry. Rows are spread over `workers`
/// threads (0 = hardware concurrency).
CorrelationMap correlationMap(const Liouvillian& L, const ComplexMatrix& jump, double weight,
                              const DensityMatrix& rho0, const TimeGrid& axis, double step,
                              unsigned workers = 0);

}  // namespace cascade
