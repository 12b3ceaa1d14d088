// Test-only oracles kept independent of the library's computation paths:
// an explicitly materialized Liouvillian with matrix-exponential propagation,
// an exhaustive-permutation passive-energy search, and deterministic random
// state/operator generators.

#pragma once

#include <algorithm>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "dopoqb/dynamics.hpp"
#include "dopoqb/fock.hpp"

namespace oracles {

using dopoqb::Complex;
using dopoqb::DenseMatrix;

// Column-stacked vectorization: vec(A X B) = (B^T kron A) vec(X).
inline Eigen::VectorXcd vec(const DenseMatrix& m) {
    return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

inline DenseMatrix unvec(const Eigen::VectorXcd& v, Eigen::Index n) {
    return Eigen::Map<const DenseMatrix>(v.data(), n, n);
}

/// Dense superoperator matrix of the Lindblad generator.
inline DenseMatrix liouvillian(const dopoqb::LindbladModel& model) {
    const Eigen::Index n = model.order();
    const DenseMatrix id = DenseMatrix::Identity(n, n);
    const DenseMatrix h = model.hamiltonian().dense();
    DenseMatrix sup = Complex(0.0, -1.0) * (Eigen::kroneckerProduct(id, h).eval() -
                                            Eigen::kroneckerProduct(h.transpose(), id).eval());
    for (const auto& c : model.collapses()) {
        const DenseMatrix l = c.op.dense();
        const DenseMatrix ldl = l.adjoint() * l;
        sup += c.rate * (Eigen::kroneckerProduct(l.conjugate(), l).eval() -
                         0.5 * Eigen::kroneckerProduct(id, ldl).eval() -
                         0.5 * Eigen::kroneckerProduct(ldl.transpose(), id).eval());
    }
    return sup;
}

/// rho(t) = unvec(expm(L t) vec(rho0)).
inline DenseMatrix propagate_expm(const dopoqb::LindbladModel& model, const DenseMatrix& rho0,
                                  double t) {
    const DenseMatrix sup = liouvillian(model);
    const DenseMatrix prop = (t * sup).exp();
    return unvec(prop * vec(rho0), rho0.rows());
}

/// Minimum of sum_k r_sigma(k) e_k over all pairings of state eigenvalues
/// with energies: the passive-state energy by exhaustive search.
inline double min_passive_energy(std::vector<double> state_eigs, std::vector<double> energies) {
    std::vector<std::size_t> perm(state_eigs.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double e = 0.0;
        for (std::size_t k = 0; k < perm.size(); ++k) e += state_eigs[perm[k]] * energies[k];
        best = std::min(best, e);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline DenseMatrix random_complex(Eigen::Index n, std::mt19937& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    DenseMatrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = Complex(dist(rng), dist(rng));
    return m;
}

inline DenseMatrix random_hermitian(Eigen::Index n, std::mt19937& rng) {
    const DenseMatrix m = random_complex(n, rng);
    return 0.5 * (m + m.adjoint()).eval();
}

inline DenseMatrix random_density(Eigen::Index n, std::mt19937& rng) {
    const DenseMatrix m = random_complex(n, rng);
    DenseMatrix rho = m * m.adjoint();
    rho /= rho.trace();
    return 0.5 * (rho + rho.adjoint()).eval();
}

}  // namespace oracles
