#pragma once

// Small dense complex linear algebra. Matrices here never exceed 16x16
// (two two-level systems, or their 16-dim superoperator space), so every
// routine is a straightforward dense loop.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cascade {

using cplx = std::complex<double>;

class DimensionError : public std::invalid_argument {
public:
    DimensionError(const std::string& op, std::size_t lhs, std::size_t rhs);
};

class NotHermitianError : public std::invalid_argument {
public:
    explicit NotHermitianError(double asymmetry);
    double asymmetry() const { return asymmetry_; }

private:
    double asymmetry_;
};

/// Square complex matrix, row-major.
class ComplexMatrix {
public:
    ComplexMatrix() : ComplexMatrix(1) {}
    explicit ComplexMatrix(std::size_t dim);
    ComplexMatrix(std::size_t dim, std::initializer_list<cplx> rowMajor);

    static ComplexMatrix identity(std::size_t dim);
    static ComplexMatrix diagonal(std::span<const cplx> diag);

    std::size_t dim() const { return dim_; }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cplx s);

    ComplexMatrix adjoint() const;
    cplx trace() const;
    bool allFinite() const;

    /// Largest |m_ij - conj(m_ji)|.
    double hermitianDefect() const;

    /// Induced 1-norm (max column sum of moduli).
    double norm1() const;

private:
    std::size_t dim_;
    std::vector<cplx> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);
ComplexMatrix operator*(ComplexMatrix a, cplx s);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

/// Largest entry-wise modulus of a - b.
double maxAbsDiff(const ComplexMatrix& a, const ComplexMatrix& b);

/// Ascending eigenvalues of a Hermitian matrix (cyclic Jacobi). Throws
/// NotHermitianError when the input is asymmetric beyond 1e-10.
std::vector<double> hermitianEigenvalues(const ComplexMatrix& m);

/// Matrix exponential by scaling and squaring around a Taylor kernel.
ComplexMatrix expm(const ComplexMatrix& m);

}  // namespace cascade
