// fock.hpp — Truncated-Fock-space operator algebra: operators, density
// matrices, tensor products, partial traces and basic state constructors.

#pragma once

#include <complex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/KroneckerProduct>

namespace dopoqb {

using Complex = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using Index = Eigen::Index;
using Dims = std::vector<Index>;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised when a coherent state loses more probability mass to the Fock
/// cutoff than the caller allows.
struct TruncationError : std::runtime_error {
    double leaked_mass;
    TruncationError(const std::string& what, double leaked)
        : std::runtime_error(what), leaked_mass(leaked) {}
};

struct StateValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Index dims_product(const Dims& dims) {
    Index n = 1;
    for (Index d : dims) n *= d;
    return n;
}

inline void check_dims(const Dims& dims, Index order, const char* what) {
    if (dims.empty())
        throw DimensionError(std::string(what) + ": empty subsystem dimension list");
    for (Index d : dims)
        if (d < 1) throw DimensionError(std::string(what) + ": subsystem dimension < 1");
    if (dims_product(dims) != order)
        throw DimensionError(std::string(what) + ": product of dims does not match matrix order");
}

}  // namespace detail

/// Sparse linear operator on a tensor product of truncated Fock spaces.
/// `dims` lists the subsystem dimensions; their product is the matrix order.
class Operator {
public:
    Operator(SparseMatrix mat, Dims dims) : mat_(std::move(mat)), dims_(std::move(dims)) {
        if (mat_.rows() != mat_.cols())
            throw DimensionError("Operator: matrix must be square");
        detail::check_dims(dims_, mat_.rows(), "Operator");
        mat_.makeCompressed();
    }

    Operator(const DenseMatrix& mat, Dims dims)
        : Operator(SparseMatrix(mat.sparseView()), std::move(dims)) {}

    const SparseMatrix& matrix() const { return mat_; }
    const Dims& dims() const { return dims_; }
    Index order() const { return mat_.rows(); }

    DenseMatrix dense() const { return DenseMatrix(mat_); }
    Operator adjoint() const { return Operator(SparseMatrix(mat_.adjoint()), dims_); }

    bool is_hermitian(double tol) const {
        SparseMatrix diff = SparseMatrix(mat_.adjoint()) - mat_;
        for (int k = 0; k < diff.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
                if (std::abs(it.value()) > tol) return false;
        return true;
    }

private:
    SparseMatrix mat_;
    Dims dims_;
};

inline void require_same_dims(const Operator& a, const Operator& b, const char* what) {
    if (a.dims() != b.dims())
        throw DimensionError(std::string(what) + ": operands act on different spaces");
}

inline Operator operator*(const Operator& a, const Operator& b) {
    require_same_dims(a, b, "operator*");
    return Operator(SparseMatrix(a.matrix() * b.matrix()), a.dims());
}

inline Operator operator+(const Operator& a, const Operator& b) {
    require_same_dims(a, b, "operator+");
    return Operator(SparseMatrix(a.matrix() + b.matrix()), a.dims());
}

inline Operator operator-(const Operator& a, const Operator& b) {
    require_same_dims(a, b, "operator-");
    return Operator(SparseMatrix(a.matrix() - b.matrix()), a.dims());
}

inline Operator operator*(Complex c, const Operator& a) {
    return Operator(SparseMatrix(c * a.matrix()), a.dims());
}

inline Operator operator*(double c, const Operator& a) { return Complex(c, 0.0) * a; }

/// Bosonic annihilation operator truncated to n Fock levels:
/// <m|a|m+1> = sqrt(m+1).
inline Operator annihilation(Index n) {
    if (n < 2) throw DimensionError("annihilation: need at least 2 Fock levels");
    SparseMatrix a(n, n);
    a.reserve(Eigen::VectorXi::Constant(n, 1));
    for (Index m = 0; m + 1 < n; ++m) a.insert(m, m + 1) = std::sqrt(double(m + 1));
    a.makeCompressed();
    return Operator(std::move(a), {n});
}

inline Operator creation(Index n) { return annihilation(n).adjoint(); }

/// Number operator a†a.
inline Operator number(Index n) {
    if (n < 2) throw DimensionError("number: need at least 2 Fock levels");
    SparseMatrix m(n, n);
    for (Index k = 1; k < n; ++k) m.insert(k, k) = double(k);
    m.makeCompressed();
    return Operator(std::move(m), {n});
}

inline Operator identity(Index n) {
    if (n < 1) throw DimensionError("identity: dimension < 1");
    SparseMatrix m(n, n);
    m.setIdentity();
    return Operator(std::move(m), {n});
}

// Two-level-system operators. Basis convention: index 0 = ground,
// index 1 = excited, so energies ascend with the basis index.
inline Operator sigma_minus() { return annihilation(2); }
inline Operator sigma_plus() { return creation(2); }
inline Operator sigma_z() {
    SparseMatrix m(2, 2);
    m.insert(0, 0) = -1.0;
    m.insert(1, 1) = 1.0;
    m.makeCompressed();
    return Operator(std::move(m), {2});
}

/// Kronecker product; the result's dims are the concatenation of the
/// operands' dims (left factor owns the slower index).
inline Operator kron(const Operator& a, const Operator& b) {
    SparseMatrix prod = Eigen::kroneckerProduct(a.matrix(), b.matrix());
    Dims dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    return Operator(std::move(prod), std::move(dims));
}

/// Validation thresholds for density matrices. Construction uses the strict
/// set; states produced by time integration carry roundoff and are checked
/// against the looser evolution set.
struct ValidityTolerances {
    double hermiticity = 1e-12;
    double trace = 1e-12;
    double positivity = 1e-12;

    static ValidityTolerances strict() { return {}; }
    static ValidityTolerances evolution() { return {1e-9, 1e-8, 1e-10}; }
};

inline double min_eigenvalue(const DenseMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hermitian, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// Hermitian, unit-trace, positive-semidefinite state of a composite system.
/// Stored dense; immutable after construction.
class DensityMatrix {
public:
    DensityMatrix(DenseMatrix mat, Dims dims,
                  const ValidityTolerances& tol = ValidityTolerances::strict())
        : mat_(std::move(mat)), dims_(std::move(dims)) {
        if (mat_.rows() != mat_.cols())
            throw DimensionError("DensityMatrix: matrix must be square");
        detail::check_dims(dims_, mat_.rows(), "DensityMatrix");
        validate(tol);
    }

    const DenseMatrix& matrix() const { return mat_; }
    const Dims& dims() const { return dims_; }
    Index order() const { return mat_.rows(); }

    /// Smallest eigenvalue, computed once during validation.
    double min_eigenvalue() const { return min_eig_; }

private:
    void validate(const ValidityTolerances& tol) {
        const double herm = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
        if (herm > tol.hermiticity)
            throw StateValidationError("DensityMatrix: not Hermitian, max asymmetry " +
                                       std::to_string(herm));
        const double tr_err = std::abs(mat_.trace() - Complex(1.0, 0.0));
        if (tr_err > tol.trace)
            throw StateValidationError("DensityMatrix: trace deviates from 1 by " +
                                       std::to_string(tr_err));
        min_eig_ = dopoqb::min_eigenvalue(mat_);
        if (min_eig_ < -tol.positivity)
            throw StateValidationError("DensityMatrix: negative eigenvalue " +
                                       std::to_string(min_eig_));
    }

    DenseMatrix mat_;
    Dims dims_;
    double min_eig_ = 0.0;
};

inline DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b,
                          const ValidityTolerances& tol = ValidityTolerances::evolution()) {
    DenseMatrix prod = Eigen::kroneckerProduct(a.matrix(), b.matrix());
    Dims dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    return DensityMatrix(std::move(prod), std::move(dims), tol);
}

/// Partial trace keeping the listed subsystems (original order preserved).
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::set<std::size_t>& keep,
                                   const ValidityTolerances& tol = ValidityTolerances::evolution()) {
    const Dims& dims = rho.dims();
    if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
    for (std::size_t s : keep)
        if (s >= dims.size()) throw std::invalid_argument("partial_trace: subsystem index out of range");

    // Row-major strides over the composite index.
    std::vector<Index> stride(dims.size());
    Index acc = 1;
    for (std::size_t m = dims.size(); m-- > 0;) {
        stride[m] = acc;
        acc *= dims[m];
    }

    Dims keep_dims, trace_dims;
    std::vector<Index> keep_stride, trace_stride;
    for (std::size_t m = 0; m < dims.size(); ++m) {
        if (keep.count(m)) {
            keep_dims.push_back(dims[m]);
            keep_stride.push_back(stride[m]);
        } else {
            trace_dims.push_back(dims[m]);
            trace_stride.push_back(stride[m]);
        }
    }

    // Flat offsets of every keep / trace multi-index.
    auto offsets = [](const Dims& d, const std::vector<Index>& s) {
        Index count = detail::dims_product(d);
        std::vector<Index> off(static_cast<std::size_t>(count), 0);
        for (Index i = 0; i < count; ++i) {
            Index rem = i;
            for (std::size_t m = d.size(); m-- > 0;) {
                off[i] += (rem % d[m]) * s[m];
                rem /= d[m];
            }
        }
        return off;
    };
    const std::vector<Index> koff = offsets(keep_dims, keep_stride);
    const std::vector<Index> toff =
        trace_dims.empty() ? std::vector<Index>{0} : offsets(trace_dims, trace_stride);

    const Index K = static_cast<Index>(koff.size());
    DenseMatrix out = DenseMatrix::Zero(K, K);
    const DenseMatrix& m = rho.matrix();
    for (Index r = 0; r < K; ++r)
        for (Index c = 0; c < K; ++c) {
            Complex sum = 0.0;
            for (Index t : toff) sum += m(koff[r] + t, koff[c] + t);
            out(r, c) = sum;
        }
    return DensityMatrix(std::move(out), std::move(keep_dims), tol);
}

/// Tr[rho * o]; real up to roundoff when o is Hermitian.
inline Complex expectation(const DensityMatrix& rho, const Operator& o) {
    if (rho.order() != o.order())
        throw std::invalid_argument("expectation: dimension mismatch");
    const DenseMatrix& m = rho.matrix();
    Complex sum = 0.0;
    const SparseMatrix& s = o.matrix();
    for (int k = 0; k < s.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(s, k); it; ++it)
            sum += m(it.col(), it.row()) * it.value();
    return sum;
}

inline DensityMatrix fock(Index n, Index k) {
    if (n < 1 || k < 0 || k >= n)
        throw DimensionError("fock: need 0 <= k < n");
    DenseMatrix m = DenseMatrix::Zero(n, n);
    m(k, k) = 1.0;
    return DensityMatrix(std::move(m), {n});
}

inline DensityMatrix vacuum(Index n) { return fock(n, 0); }

/// Coherent state |alpha> truncated to n levels and renormalized. Fails if
/// the truncated tail carries more than `max_leak` probability.
inline DensityMatrix coherent(Index n, Complex alpha, double max_leak = 1e-8) {
    if (n < 2) throw DimensionError("coherent: need at least 2 Fock levels");
    Eigen::VectorXcd psi(n);
    // amplitude recursion: psi_{m} = psi_{m-1} * alpha / sqrt(m)
    psi(0) = std::exp(-0.5 * std::norm(alpha));
    for (Index m = 1; m < n; ++m) psi(m) = psi(m - 1) * alpha / std::sqrt(double(m));
    const double captured = psi.squaredNorm();
    const double leaked = 1.0 - captured;
    if (leaked > max_leak) {
        std::ostringstream os;
        os << "coherent: truncation at n=" << n << " leaks " << leaked
           << " probability for |alpha|=" << std::abs(alpha);
        throw TruncationError(os.str(), leaked);
    }
    psi /= std::sqrt(captured);
    DenseMatrix m = psi * psi.adjoint();
    return DensityMatrix(std::move(m), {n});
}

}  // namespace dopoqb
