#include "cascade/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cascade {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw InvalidParameter(what);
    }
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void SystemParams::validate() const {
    require(finite(Gamma) && Gamma > 0.0, "Gamma must be positive");
    require(finite(gamma_d) && gamma_d >= 0.0, "gamma_d must be non-negative");
    require(finite(B) && B >= 0.0, "B must be non-negative");
    require(finite(delta_L), "delta_L must be finite");
    require(eta_re >= 0.0 && eta_re <= 1.0, "eta_re must lie in [0, 1]");
    require(eta_loss_prime >= 0.0 && eta_loss_prime <= 1.0, "eta_loss_prime must lie in [0, 1]");
    require(finite(jitter_fwhm) && jitter_fwhm >= 0.0, "jitter_fwhm must be non-negative");
}

void PulseSpec::validate() const {
    require(finite(area) && area >= 0.0, "pulse area must be non-negative");
    require(finite(tau_p) && tau_p > 0.0, "pulse tau_p must be positive");
    require(finite(t_c), "pulse t_c must be finite");
}

TimeGrid::TimeGrid(double tStart, double tEnd, double dt)
    : t_start_(tStart), t_end_(tEnd), dt_(dt), steps_(0) {
    require(finite(tStart) && finite(tEnd) && finite(dt), "time grid values must be finite");
    require(dt > 0.0, "time grid dt must be positive");
    require(tEnd > tStart, "time grid t_end must exceed t_start");
    const double ratio = (tEnd - tStart) / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << "time grid span " << (tEnd - tStart) << " ps is not a multiple of dt = " << dt;
        throw InvalidParameter(os.str());
    }
    steps_ = static_cast<std::size_t>(rounded);
}

std::size_t TimeGrid::nearestIndex(double t) const {
    const double x = std::round((t - t_start_) / dt_);
    if (x <= 0.0) {
        return 0;
    }
    return std::min(steps_, static_cast<std::size_t>(x));
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
    if (m_.dim() != 2 && m_.dim() != 4) {
        throw InvalidParameter("density matrix must be 2x2 or 4x4");
    }
    if (!m_.allFinite()) {
        throw InvalidParameter("density matrix has non-finite entries");
    }
    const double defect = m_.hermitianDefect();
    if (defect > 1e-10) {
        throw NotHermitianError(defect);
    }
    const cplx tr = m_.trace();
    if (std::abs(tr - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "density matrix trace " << tr.real() << "+" << tr.imag() << "i is not 1";
        throw InvalidParameter(os.str());
    }
}

double DensityMatrix::minEigenvalue() const { return hermitianEigenvalues(m_).front(); }

cplx DensityMatrix::expectation(const ComplexMatrix& op) const { return (op * m_).trace(); }

namespace ops {

ComplexMatrix sigmaMinus() { return ComplexMatrix(2, {0.0, 1.0, 0.0, 0.0}); }
ComplexMatrix sigmaPlus() { return ComplexMatrix(2, {0.0, 0.0, 1.0, 0.0}); }
ComplexMatrix sigmaZ() { return ComplexMatrix(2, {-1.0, 0.0, 0.0, 1.0}); }
ComplexMatrix sigmaX() { return ComplexMatrix(2, {0.0, 1.0, 1.0, 0.0}); }
ComplexMatrix identity2() { return ComplexMatrix::identity(2); }

}  // namespace ops

ComplexMatrix embed(const ComplexMatrix& op, int which, int n) {
    if (op.dim() != 2) {
        throw DimensionError("embed", op.dim(), 2);
    }
    if (n < 1 || n > 2 || which < 1 || which > n) {
        std::ostringstream os;
        os << "embed: subsystem " << which << " of " << n << " is out of range";
        throw std::out_of_range(os.str());
    }
    if (n == 1) {
        return op;
    }
    return which == 1 ? kron(op, ops::identity2()) : kron(ops::identity2(), op);
}

double gaussianRabi(const PulseSpec& p, double t) {
    const double ln2 = std::numbers::ln2;
    const double norm = std::sqrt(2.0 * ln2 / (std::numbers::pi * p.tau_p * p.tau_p));
    const double dt = t - p.t_c;
    return p.area * norm * std::exp(-2.0 * ln2 * dt * dt / (p.tau_p * p.tau_p));
}

double collectiveCoefficient(const SystemParams& params) {
    return std::sqrt(params.etaLoss()) - std::sqrt(params.eta_re);
}

ComplexMatrix collectiveJump(const SystemParams& params) {
    const ComplexMatrix sm = ops::sigmaMinus();
    return collectiveCoefficient(params) * embed(sm, 1, 2) + embed(sm, 2, 2);
}

DensityMatrix groundState(int n) {
    if (n < 1 || n > 2) {
        throw std::out_of_range("groundState: n must be 1 or 2");
    }
    ComplexMatrix m(n == 1 ? 2 : 4);
    m(0, 0) = 1.0;
    return DensityMatrix(std::move(m));
}

}  // namespace cascade
