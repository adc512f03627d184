#include "cascade/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cascade {

namespace {

std::string dimensionMessage(const std::string& op, std::size_t lhs, std::size_t rhs) {
    std::ostringstream os;
    os << op << ": dimension mismatch (" << lhs << "x" << lhs << " vs " << rhs << "x" << rhs << ")";
    return os.str();
}

std::string hermitianMessage(double asymmetry) {
    std::ostringstream os;
    os << "matrix is not Hermitian: max |m - m^dagger| = " << asymmetry;
    return os.str();
}

void requireSameDim(const char* op, const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError(op, a.dim(), b.dim());
    }
}

}  // namespace

DimensionError::DimensionError(const std::string& op, std::size_t lhs, std::size_t rhs)
    : std::invalid_argument(dimensionMessage(op, lhs, rhs)) {}

NotHermitianError::NotHermitianError(double asymmetry)
    : std::invalid_argument(hermitianMessage(asymmetry)), asymmetry_(asymmetry) {}

ComplexMatrix::ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {
    if (dim == 0) {
        throw std::invalid_argument("ComplexMatrix: dimension must be at least 1");
    }
}

ComplexMatrix::ComplexMatrix(std::size_t dim, std::initializer_list<cplx> rowMajor)
    : ComplexMatrix(dim) {
    if (rowMajor.size() != dim * dim) {
        throw std::invalid_argument("ComplexMatrix: initializer has wrong number of entries");
    }
    std::copy(rowMajor.begin(), rowMajor.end(), data_.begin());
}

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const cplx> diag) {
    ComplexMatrix m(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m(i, i) = diag[i];
    }
    return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    requireSameDim("add", *this, o);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += o.data_[i];
    }
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    requireSameDim("subtract", *this, o);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= o.data_[i];
    }
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
    for (auto& v : data_) {
        v *= s;
    }
    return *this;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c < dim_; ++c) {
            out(c, r) = std::conj((*this)(r, c));
        }
    }
    return out;
}

cplx ComplexMatrix::trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        t += (*this)(i, i);
    }
    return t;
}

bool ComplexMatrix::allFinite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& v) {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
    });
}

double ComplexMatrix::hermitianDefect() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = r; c < dim_; ++c) {
            worst = std::max(worst, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
        }
    }
    return worst;
}

double ComplexMatrix::norm1() const {
    double best = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
        double col = 0.0;
        for (std::size_t r = 0; r < dim_; ++r) {
            col += std::abs((*this)(r, c));
        }
        best = std::max(best, col);
    }
    return best;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
    a += b;
    return a;
}

ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
    a -= b;
    return a;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    requireSameDim("multiply", a, b);
    const std::size_t n = a.dim();
    ComplexMatrix out(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < n; ++k) {
            const cplx ark = a(r, k);
            if (ark == cplx{}) {
                continue;
            }
            for (std::size_t c = 0; c < n; ++c) {
                out(r, c) += ark * b(k, c);
            }
        }
    }
    return out;
}

ComplexMatrix operator*(cplx s, ComplexMatrix a) {
    a *= s;
    return a;
}

ComplexMatrix operator*(ComplexMatrix a, cplx s) {
    a *= s;
    return a;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const std::size_t na = a.dim();
    const std::size_t nb = b.dim();
    ComplexMatrix out(na * nb);
    for (std::size_t ar = 0; ar < na; ++ar) {
        for (std::size_t ac = 0; ac < na; ++ac) {
            const cplx s = a(ar, ac);
            for (std::size_t br = 0; br < nb; ++br) {
                for (std::size_t bc = 0; bc < nb; ++bc) {
                    out(ar * nb + br, ac * nb + bc) = s * b(br, bc);
                }
            }
        }
    }
    return out;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a * b - b * a;
}

double maxAbsDiff(const ComplexMatrix& a, const ComplexMatrix& b) {
    requireSameDim("maxAbsDiff", a, b);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

std::vector<double> hermitianEigenvalues(const ComplexMatrix& m) {
    const double defect = m.hermitianDefect();
    if (defect > 1e-10) {
        throw NotHermitianError(defect);
    }

    // Real symmetric embedding [[Re, -Im], [Im, Re]]: its spectrum is the
    // Hermitian spectrum with every eigenvalue doubled.
    const std::size_t n = m.dim();
    const std::size_t N = 2 * n;
    std::vector<double> s(N * N);
    auto at = [&](std::size_t r, std::size_t c) -> double& { return s[r * N + c]; };
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const cplx h = 0.5 * (m(r, c) + std::conj(m(c, r)));
            at(r, c) = h.real();
            at(r + n, c + n) = h.real();
            at(r, c + n) = -h.imag();
            at(r + n, c) = h.imag();
        }
    }

    auto offNorm = [&] {
        double sum = 0.0;
        for (std::size_t r = 0; r < N; ++r) {
            for (std::size_t c = 0; c < N; ++c) {
                if (r != c) {
                    sum += at(r, c) * at(r, c);
                }
            }
        }
        return sum;
    };
    double scale = 0.0;
    for (double v : s) {
        scale += v * v;
    }

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (offNorm() <= 1e-30 * scale) {
            break;
        }
        for (std::size_t p = 0; p + 1 < N; ++p) {
            for (std::size_t q = p + 1; q < N; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < N; ++k) {
                    const double akp = at(k, p);
                    const double akq = at(k, q);
                    at(k, p) = c * akp - sn * akq;
                    at(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < N; ++k) {
                    const double apk = at(p, k);
                    const double aqk = at(q, k);
                    at(p, k) = c * apk - sn * aqk;
                    at(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }

    std::vector<double> doubled(N);
    for (std::size_t i = 0; i < N; ++i) {
        doubled[i] = at(i, i);
    }
    std::sort(doubled.begin(), doubled.end());
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) {
        eig[i] = 0.5 * (doubled[2 * i] + doubled[2 * i + 1]);
    }
    return eig;
}

ComplexMatrix expm(const ComplexMatrix& m) {
    if (!m.allFinite()) {
        throw std::invalid_argument("expm: matrix has non-finite entries");
    }
    const std::size_t n = m.dim();
    const double norm = m.norm1();
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const ComplexMatrix x = m * cplx(std::ldexp(1.0, -squarings));

    // ||x|| <= 0.5: 0.5^20 / 20! is far below double precision.
    ComplexMatrix sum = ComplexMatrix::identity(n);
    ComplexMatrix term = ComplexMatrix::identity(n);
    for (int k = 1; k <= 20; ++k) {
        term = term * x;
        term *= cplx(1.0 / k);
        sum += term;
        if (term.norm1() <= 1e-18 * sum.norm1()) {
            break;
        }
    }
    for (int i = 0; i < squarings; ++i) {
        sum = sum * sum;
    }
    return sum;
}

}  // namespace cascade
