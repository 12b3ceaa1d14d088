// work.hpp — Ergotropy, passive states, coherent/incoherent decomposition
// and average charging power.

#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dopoqb/fock.hpp"

namespace dopoqb {

struct UnsupportedInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Extractable work split into the part carried by energy-basis coherences
/// and the part already present in the dephased populations.
struct ErgotropyBreakdown {
    double total;
    double coherent;
    double incoherent;
};

namespace detail {

// Integrator roundoff may leave eigenvalues slightly negative; values in
// [-clamp_tol, 0) are zeroed and the spectrum renormalized. Anything below
// -clamp_tol is a genuine positivity violation.
inline std::vector<double> clamped_spectrum(Eigen::VectorXd vals, double clamp_tol = 1e-10) {
    double sum = 0.0;
    for (Index i = 0; i < vals.size(); ++i) {
        if (vals(i) < -clamp_tol)
            throw StateValidationError("spectrum: eigenvalue below positivity tolerance: " +
                                       std::to_string(vals(i)));
        if (vals(i) < 0.0) vals(i) = 0.0;
        sum += vals(i);
    }
    std::vector<double> out(vals.data(), vals.data() + vals.size());
    if (sum > 0.0)
        for (double& v : out) v /= sum;
    return out;
}

struct EnergyBasis {
    std::vector<double> energies;          // ascending
    DenseMatrix vectors;                   // columns aligned with energies
    bool computational = false;            // true when vectors is a permuted identity
    std::vector<Index> order;              // computational-basis index per column
};

// Eigen-decompose a Hermitian observable, columns sorted by ascending
// eigenvalue. Diagonal operators skip the dense solve.
inline EnergyBasis energy_basis(const Operator& h) {
    const SparseMatrix& s = h.matrix();
    bool diagonal = true;
    for (int k = 0; k < s.outerSize() && diagonal; ++k)
        for (SparseMatrix::InnerIterator it(s, k); it; ++it)
            if (it.row() != it.col() && std::abs(it.value()) > 0.0) {
                diagonal = false;
                break;
            }

    EnergyBasis basis;
    const Index n = h.order();
    if (diagonal) {
        std::vector<double> diag(n, 0.0);
        for (int k = 0; k < s.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(s, k); it; ++it)
                diag[it.row()] = it.value().real();
        basis.order.resize(n);
        std::iota(basis.order.begin(), basis.order.end(), Index(0));
        std::stable_sort(basis.order.begin(), basis.order.end(),
                         [&diag](Index a, Index b) { return diag[a] < diag[b]; });
        basis.energies.resize(n);
        for (Index i = 0; i < n; ++i) basis.energies[i] = diag[basis.order[i]];
        basis.computational = true;
    } else {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
        basis.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
        basis.vectors = es.eigenvectors();
    }
    return basis;
}

inline std::vector<double> state_spectrum_descending(const DensityMatrix& rho,
                                                     double clamp_tol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
    std::vector<double> vals = clamped_spectrum(es.eigenvalues(), clamp_tol);
    std::stable_sort(vals.begin(), vals.end(), std::greater<double>());
    return vals;
}

inline void require_hermitian(const Operator& h, const char* what) {
    if (!h.is_hermitian(1e-10))
        throw std::invalid_argument(std::string(what) + ": observable is not Hermitian");
}

inline void require_same_order(const DensityMatrix& rho, const Operator& h, const char* what) {
    if (rho.order() != h.order())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace detail

/// Passive state of rho with respect to h: eigenvalues of rho sorted
/// descending, paired with eigenstates of h sorted by ascending energy.
inline DensityMatrix passive_state(const DensityMatrix& rho, const Operator& h) {
    detail::require_hermitian(h, "passive_state");
    detail::require_same_order(rho, h, "passive_state");
    const auto basis = detail::energy_basis(h);
    const auto spectrum = detail::state_spectrum_descending(rho);
    const Index n = rho.order();
    DenseMatrix out = DenseMatrix::Zero(n, n);
    if (basis.computational) {
        for (Index i = 0; i < n; ++i) out(basis.order[i], basis.order[i]) = spectrum[i];
    } else {
        for (Index i = 0; i < n; ++i)
            out.noalias() += spectrum[i] * (basis.vectors.col(i) * basis.vectors.col(i).adjoint());
        out = 0.5 * (out + out.adjoint()).eval();
    }
    return DensityMatrix(std::move(out), rho.dims(), ValidityTolerances::evolution());
}

/// Maximum work extractable by unitaries: Tr[rho h] - Tr[passive(rho) h].
inline double ergotropy(const DensityMatrix& rho, const Operator& h) {
    detail::require_hermitian(h, "ergotropy");
    detail::require_same_order(rho, h, "ergotropy");
    const auto basis = detail::energy_basis(h);
    const auto spectrum = detail::state_spectrum_descending(rho);
    const double energy = expectation(rho, h).real();
    double passive_energy = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i)
        passive_energy += spectrum[i] * basis.energies[i];
    return energy - passive_energy;
}

/// Remove all coherences of rho in the eigen-energy basis of h. Requires a
/// nondegenerate spectrum (the basis is otherwise not unique).
inline DensityMatrix dephase(const DensityMatrix& rho, const Operator& h) {
    detail::require_hermitian(h, "dephase");
    detail::require_same_order(rho, h, "dephase");
    const auto basis = detail::energy_basis(h);
    const Index n = rho.order();
    const double span = std::max(1.0, std::abs(basis.energies.back() - basis.energies.front()));
    for (Index i = 0; i + 1 < n; ++i)
        if (std::abs(basis.energies[i + 1] - basis.energies[i]) < 1e-12 * span)
            throw UnsupportedInputError("dephase: degenerate observable spectrum");

    DenseMatrix out = DenseMatrix::Zero(n, n);
    if (basis.computational) {
        out.diagonal() = rho.matrix().diagonal();
    } else {
        for (Index i = 0; i < n; ++i) {
            const double w =
                (basis.vectors.col(i).adjoint() * rho.matrix() * basis.vectors.col(i))(0).real();
            out.noalias() += w * (basis.vectors.col(i) * basis.vectors.col(i).adjoint());
        }
        out = 0.5 * (out + out.adjoint()).eval();
    }
    return DensityMatrix(std::move(out), rho.dims(), ValidityTolerances::evolution());
}

/// Total / coherent / incoherent ergotropy of rho with respect to h.
inline ErgotropyBreakdown split(const DensityMatrix& rho, const Operator& h) {
    detail::require_hermitian(h, "split");
    detail::require_same_order(rho, h, "split");
    const auto basis = detail::energy_basis(h);
    const Index n = rho.order();
    const double span = std::max(1.0, std::abs(basis.energies.back() - basis.energies.front()));
    for (Index i = 0; i + 1 < n; ++i)
        if (std::abs(basis.energies[i + 1] - basis.energies[i]) < 1e-12 * span)
            throw UnsupportedInputError("split: degenerate observable spectrum");

    // Populations of rho in the energy basis; their descending sort is the
    // spectrum of the dephased state.
    Eigen::VectorXd pops(n);
    if (basis.computational) {
        for (Index i = 0; i < n; ++i) pops(i) = rho.matrix()(basis.order[i], basis.order[i]).real();
    } else {
        for (Index i = 0; i < n; ++i)
            pops(i) =
                (basis.vectors.col(i).adjoint() * rho.matrix() * basis.vectors.col(i))(0).real();
    }
    std::vector<double> deph_desc = detail::clamped_spectrum(pops);
    std::stable_sort(deph_desc.begin(), deph_desc.end(), std::greater<double>());
    const auto spectrum = detail::state_spectrum_descending(rho);

    double energy = 0.0;
    for (Index i = 0; i < n; ++i) energy += pops(i) * basis.energies[i];
    double deph_passive = 0.0, passive = 0.0;
    for (Index i = 0; i < n; ++i) {
        deph_passive += deph_desc[i] * basis.energies[i];
        passive += spectrum[i] * basis.energies[i];
    }

    ErgotropyBreakdown b;
    b.incoherent = energy - deph_passive;
    b.coherent = deph_passive - passive;
    b.total = energy - passive;
    return b;
}

/// Average charging power P(t) = W(t)/t, with P(0) defined as 0.
inline std::vector<double> avg_power(const std::vector<double>& work,
                                     const std::vector<double>& times) {
    if (work.size() != times.size())
        throw std::invalid_argument("avg_power: series lengths differ");
    std::vector<double> p(work.size());
    for (std::size_t i = 0; i < work.size(); ++i) {
        if (times[i] < 0.0) throw std::invalid_argument("avg_power: negative time");
        p[i] = times[i] > 0.0 ? work[i] / times[i] : 0.0;
    }
    return p;
}

}  // namespace dopoqb
