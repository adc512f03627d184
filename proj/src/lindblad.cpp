#include "cascade/lindblad.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace cascade {

namespace {

const cplx kI{0.0, 1.0};

void symmetrize(ComplexMatrix& m) {
    const std::size_t n = m.dim();
    for (std::size_t r = 0; r < n; ++r) {
        m(r, r) = m(r, r).real();
        for (std::size_t c = r + 1; c < n; ++c) {
            const cplx avg = 0.5 * (m(r, c) + std::conj(m(c, r)));
            m(r, c) = avg;
            m(c, r) = std::conj(avg);
        }
    }
}

// out += s * a
void axpy(ComplexMatrix& out, cplx s, const ComplexMatrix& a) {
    auto o = out.data();
    auto x = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] += s * x[i];
    }
}

std::size_t strideOf(const TimeGrid& axis, double step) {
    if (!(step > 0.0)) {
        throw InvalidParameter("integration step must be positive");
    }
    const double ratio = axis.dt() / step;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
        std::ostringstream os;
        os << "map spacing " << axis.dt() << " ps is not a multiple of the integration step "
           << step << " ps";
        throw InvalidParameter(os.str());
    }
    return static_cast<std::size_t>(rounded);
}

}  // namespace

ComplexMatrix dissipator(const ComplexMatrix& x, const ComplexMatrix& rho) {
    if (x.dim() != rho.dim()) {
        throw DimensionError("dissipator", x.dim(), rho.dim());
    }
    const ComplexMatrix xdag = x.adjoint();
    const ComplexMatrix xdagx = xdag * x;
    ComplexMatrix out = x * rho * xdag;
    axpy(out, -0.5, xdagx * rho);
    axpy(out, -0.5, rho * xdagx);
    return out;
}

Liouvillian::Liouvillian(Kind kind, SystemParams params, PulseSpec pulse)
    : kind_(kind), params_(params), pulse_(pulse) {
    params_.validate();
    pulse_.validate();

    const int n = kind == Kind::Single ? 1 : 2;
    auto channel = [](ComplexMatrix x) {
        ComplexMatrix xdag = x.adjoint();
        ComplexMatrix xdagx = xdag * x;
        return Channel{std::move(x), std::move(xdag), std::move(xdagx)};
    };

    lower1_ = embed(ops::sigmaMinus(), 1, n);
    raise1_ = embed(ops::sigmaPlus(), 1, n);
    drive_ = 0.5 * (lower1_ + raise1_);
    detune_ = 0.5 * embed(ops::sigmaZ(), 1, n);
    decay1_ = channel(lower1_);
    dephase1_ = channel(embed(ops::sigmaZ(), 1, n));

    if (kind == Kind::Cascaded) {
        lower2_ = embed(ops::sigmaMinus(), 2, n);
        raise2_ = embed(ops::sigmaPlus(), 2, n);
        detune_ += 0.5 * embed(ops::sigmaZ(), 2, n);
        decay2_ = channel(lower2_);
        dephase2_ = channel(embed(ops::sigmaZ(), 2, n));
        cascadeRate_ = 0.5 * std::sqrt(params_.etaLoss()) * params_.Gamma;
    }

    // The generator is quadratic in Omega, so three evaluations per basis
    // element recover the coefficient superoperators exactly.
    const std::size_t d = dim();
    const std::size_t n2 = d * d;
    super0_.assign(n2 * n2, 0.0);
    super1_.assign(n2 * n2, 0.0);
    super2_.assign(n2 * n2, 0.0);
    for (std::size_t k = 0; k < n2; ++k) {
        ComplexMatrix basis(d);
        basis.data()[k] = 1.0;
        const ComplexMatrix a0 = applyAt(0.0, basis);
        const ComplexMatrix ap = applyAt(1.0, basis);
        const ComplexMatrix am = applyAt(-1.0, basis);
        for (std::size_t r = 0; r < n2; ++r) {
            const cplx v0 = a0.data()[r];
            const cplx vp = ap.data()[r];
            const cplx vm = am.data()[r];
            super0_[r * n2 + k] = v0;
            super1_[r * n2 + k] = 0.5 * (vp - vm);
            super2_[r * n2 + k] = 0.5 * (vp + vm) - v0;
        }
    }
}

void Liouvillian::addDissipator(ComplexMatrix& out, double rate, const Channel& c,
                                const ComplexMatrix& rho) {
    if (rate == 0.0) {
        return;
    }
    axpy(out, rate, c.x * rho * c.xdag);
    axpy(out, -0.5 * rate, c.xdagx * rho);
    axpy(out, -0.5 * rate, rho * c.xdagx);
}

ComplexMatrix Liouvillian::operator()(double t, const ComplexMatrix& rho) const {
    if (rho.dim() != dim()) {
        throw DimensionError("Liouvillian", dim(), rho.dim());
    }
    return applyAt(rabi(t), rho);
}

void Liouvillian::apply(double t, std::span<const cplx> rho, std::span<cplx> out) const {
    const std::size_t n2 = dim() * dim();
    if (rho.size() != n2 || out.size() != n2) {
        throw DimensionError("Liouvillian::apply", dim(), 0);
    }
    const double omega = rabi(t);
    const double omega2 = omega * omega;
    for (std::size_t r = 0; r < n2; ++r) {
        const cplx* l0 = &super0_[r * n2];
        const cplx* l1 = &super1_[r * n2];
        const cplx* l2 = &super2_[r * n2];
        cplx acc0 = 0.0, acc1 = 0.0, acc2 = 0.0;
        for (std::size_t c = 0; c < n2; ++c) {
            acc0 += l0[c] * rho[c];
            acc1 += l1[c] * rho[c];
            acc2 += l2[c] * rho[c];
        }
        out[r] = acc0 + omega * acc1 + omega2 * acc2;
    }
}

ComplexMatrix Liouvillian::applyAt(double omega, const ComplexMatrix& rho) const {
    const SystemParams& p = params_;

    ComplexMatrix h = omega * drive_;
    if (p.delta_L != 0.0) {
        axpy(h, p.delta_L, detune_);
    }

    ComplexMatrix out = -kI * commutator(h, rho);
    addDissipator(out, p.Gamma, decay1_, rho);
    addDissipator(out, p.gamma_d + p.B * omega * omega, dephase1_, rho);

    if (kind_ == Kind::Cascaded) {
        addDissipator(out, p.Gamma, *decay2_, rho);
        addDissipator(out, p.gamma_d, *dephase2_, rho);
        if (cascadeRate_ != 0.0) {
            // -k ([s+2, s-1 rho] + [rho s+1, s-2])
            const ComplexMatrix lowered = lower1_ * rho;
            const ComplexMatrix raised = rho * raise1_;
            axpy(out, -cascadeRate_, commutator(raise2_, lowered));
            axpy(out, -cascadeRate_, commutator(raised, lower2_));
        }
    }
    return out;
}

Liouvillian liouvillianSingle(const SystemParams& params, const PulseSpec& pulse) {
    return Liouvillian(Liouvillian::Kind::Single, params, pulse);
}

Liouvillian liouvillianCascaded(const SystemParams& params, const PulseSpec& pulse) {
    return Liouvillian(Liouvillian::Kind::Cascaded, params, pulse);
}

ComplexMatrix rk4Step(const Liouvillian& L, double t, const ComplexMatrix& rho, double h) {
    if (rho.dim() != L.dim()) {
        throw DimensionError("rk4Step", L.dim(), rho.dim());
    }
    constexpr std::size_t kMax = 16;
    const std::size_t n = rho.data().size();
    std::array<cplx, kMax> k1{}, k2{}, k3{}, k4{}, tmp{};
    const auto x = rho.data();
    auto view = [n](std::array<cplx, kMax>& a) { return std::span<cplx>(a.data(), n); };
    auto cview = [n](const std::array<cplx, kMax>& a) { return std::span<const cplx>(a.data(), n); };

    L.apply(t, x, view(k1));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    L.apply(t + 0.5 * h, cview(tmp), view(k2));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    L.apply(t + 0.5 * h, cview(tmp), view(k3));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    L.apply(t + h, cview(tmp), view(k4));

    ComplexMatrix next(rho.dim());
    auto y = next.data();
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    symmetrize(next);
    return next;
}

Trajectory propagate(const Liouvillian& L, const DensityMatrix& rho0, const TimeGrid& grid) {
    if (rho0.dim() != L.dim()) {
        throw DimensionError("propagate", L.dim(), rho0.dim());
    }
    Trajectory traj{grid, {}, rho0.minEigenvalue(), 0.0};
    traj.states.reserve(grid.size());
    traj.states.push_back(rho0);

    ComplexMatrix rho = rho0.matrix();
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const double t = grid.at(k);
        rho = rk4Step(L, t, rho, grid.dt());

        const double minEig = hermitianEigenvalues(rho).front();
        if (!rho.allFinite() || minEig < -1e-6) {
            std::ostringstream os;
            os << "state lost positivity at t = " << grid.at(k + 1) << " ps (min eigenvalue "
               << minEig << "); the step dt = " << grid.dt() << " ps is too coarse";
            throw IntegrationError(os.str());
        }
        traj.minEigenvalue = std::min(traj.minEigenvalue, minEig);
        traj.maxTraceDrift = std::max(traj.maxTraceDrift, std::abs(rho.trace() - 1.0));
        traj.states.emplace_back(rho);
    }
    return traj;
}

CorrelationMap correlationMap(const Liouvillian& L, const ComplexMatrix& jump, double weight,
                              const DensityMatrix& rho0, const TimeGrid& axis, double step,
                              unsigned workers) {
    if (jump.dim() != L.dim()) {
        throw DimensionError("correlationMap", L.dim(), jump.dim());
    }
    const std::size_t stride = strideOf(axis, step);
    const TimeGrid fine(axis.tStart(), axis.tEnd(), step);
    const Trajectory traj = propagate(L, rho0, fine);

    const std::size_t n = axis.size();
    CorrelationMap map{axis, std::vector<double>(n * n, 0.0)};
    const ComplexMatrix jumpDag = jump.adjoint();
    const ComplexMatrix number = jumpDag * jump;

    auto row = [&](std::size_t i) {
        std::size_t k = i * stride;
        ComplexMatrix cond = jump * traj.states[k].matrix() * jumpDag;
        map(i, i) = weight * (number * cond).trace().real();
        for (std::size_t j = i + 1; j < n; ++j) {
            for (std::size_t s = 0; s < stride; ++s, ++k) {
                cond = rk4Step(L, fine.at(k), cond, step);
            }
            const double v = weight * (number * cond).trace().real();
            map(i, j) = v;
            map(j, i) = v;
        }
    };

    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            row(i);
        }
        return map;
    }

    // Each row writes only its own (i, j >= i) and mirrored (j, i) cells.
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                row(i);
            }
        });
    }
    pool.clear();
    return map;
}

}  // namespace cascade
