#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "dopoqb/fock.hpp"
#include "dopoqb/work.hpp"
#include "support/oracles.hpp"

using namespace dopoqb;
using Catch::Approx;

namespace {

Operator diag_op(std::initializer_list<double> entries) {
    const Eigen::Index n = static_cast<Eigen::Index>(entries.size());
    DenseMatrix m = DenseMatrix::Zero(n, n);
    Eigen::Index i = 0;
    for (double e : entries) m(i, i) = e, ++i;
    return Operator(m, {n});
}

DensityMatrix random_state(Eigen::Index n, std::mt19937& rng) {
    return DensityMatrix(oracles::random_density(n, rng), {n}, ValidityTolerances::evolution());
}

std::vector<double> eigs_descending(const DenseMatrix& m) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m, Eigen::EigenvaluesOnly);
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
    std::sort(v.begin(), v.end(), std::greater<double>());
    return v;
}

}  // namespace

TEST_CASE("passive state of a two-level inversion", "[work]") {
    DenseMatrix r(2, 2);
    r << 0.2, 0, 0, 0.8;
    const DensityMatrix rho(r, {2});
    const DensityMatrix passive = passive_state(rho, diag_op({0.0, 1.0}));
    REQUIRE(passive.matrix()(0, 0).real() == Approx(0.8).margin(1e-14));
    REQUIRE(passive.matrix()(1, 1).real() == Approx(0.2).margin(1e-14));
}

TEST_CASE("a thermal-like state is a fixed point of passivation", "[work]") {
    DenseMatrix r = DenseMatrix::Zero(4, 4);
    r.diagonal() << 0.5, 0.25, 0.15, 0.1;
    const DensityMatrix rho(r, {4});
    const DensityMatrix passive = passive_state(rho, number(4));
    REQUIRE((passive.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("passive state minimizes energy over all permutations", "[work]") {
    std::mt19937 rng(5);
    const DensityMatrix rho = random_state(5, rng);
    const DenseMatrix hmat = oracles::random_hermitian(5, rng);
    const Operator h(hmat, {5});
    const DensityMatrix passive = passive_state(rho, h);

    Eigen::SelfAdjointEigenSolver<DenseMatrix> es_h(hmat);
    std::vector<double> energies(es_h.eigenvalues().data(), es_h.eigenvalues().data() + 5);
    const double oracle =
        oracles::min_passive_energy(eigs_descending(rho.matrix()), energies);
    REQUIRE(expectation(passive, h).real() == Approx(oracle).margin(1e-10));
}

TEST_CASE("passive state commutes with the observable and is idempotent", "[work]") {
    std::mt19937 rng(6);
    const DensityMatrix rho = random_state(6, rng);
    const Operator h(oracles::random_hermitian(6, rng), {6});
    const DensityMatrix p1 = passive_state(rho, h);
    const DenseMatrix comm = p1.matrix() * h.dense() - h.dense() * p1.matrix();
    REQUIRE(comm.cwiseAbs().maxCoeff() < 1e-10);
    const DensityMatrix p2 = passive_state(p1, h);
    REQUIRE((p2.matrix() - p1.matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ergotropy basics", "[work]") {
    REQUIRE(ergotropy(vacuum(6), number(6)) == Approx(0.0).margin(1e-12));
    // pure excited state: passive state is the vacuum
    REQUIRE(ergotropy(fock(4, 2), number(4)) == Approx(2.0).margin(1e-12));
    REQUIRE_THROWS_AS(ergotropy(fock(4, 2), annihilation(4)), std::invalid_argument);
}

TEST_CASE("ergotropy matches the exhaustive permutation oracle", "[work]") {
    std::mt19937 rng(9);
    for (int rep = 0; rep < 5; ++rep) {
        const DensityMatrix rho = random_state(6, rng);
        const DenseMatrix hmat = oracles::random_hermitian(6, rng);
        const Operator h(hmat, {6});
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es_h(hmat);
        std::vector<double> energies(es_h.eigenvalues().data(), es_h.eigenvalues().data() + 6);
        const double oracle = expectation(rho, h).real() -
                              oracles::min_passive_energy(eigs_descending(rho.matrix()),
                                                          energies);
        REQUIRE(ergotropy(rho, h) == Approx(oracle).margin(1e-10));
    }
}

TEST_CASE("ergotropy of any passive state vanishes", "[work]") {
    std::mt19937 rng(10);
    const DensityMatrix rho = random_state(5, rng);
    const Operator h(oracles::random_hermitian(5, rng), {5});
    const DensityMatrix passive = passive_state(rho, h);
    REQUIRE(std::abs(ergotropy(passive, h)) < 1e-10);
}

TEST_CASE("dephase leaves diagonal states unchanged", "[work]") {
    DenseMatrix r = DenseMatrix::Zero(3, 3);
    r.diagonal() << 0.5, 0.3, 0.2;
    const DensityMatrix rho(r, {3});
    REQUIRE((dephase(rho, number(3)).matrix() - r).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dephasing a coherent state keeps the Poisson diagonal", "[work]") {
    const DensityMatrix rho = coherent(8, Complex(1.0, 0.0), 1e-4);
    const DensityMatrix deph = dephase(rho, number(8));
    for (Eigen::Index i = 0; i < 8; ++i)
        for (Eigen::Index j = 0; j < 8; ++j) {
            if (i == j)
                REQUIRE(deph.matrix()(i, i).real() ==
                        Approx(rho.matrix()(i, i).real()).margin(1e-12));
            else
                REQUIRE(std::abs(deph.matrix()(i, j)) == 0.0);
        }
}

TEST_CASE("dephasing never increases ergotropy", "[work]") {
    std::mt19937 rng(12);
    const Operator h = number(5);
    for (int rep = 0; rep < 100; ++rep) {
        const DensityMatrix rho = random_state(5, rng);
        REQUIRE(ergotropy(dephase(rho, h), h) <= ergotropy(rho, h) + 1e-10);
    }
}

TEST_CASE("dephase rejects degenerate observables", "[work]") {
    const DensityMatrix rho = fock(4, 1);
    REQUIRE_THROWS_AS(dephase(rho, diag_op({0.0, 1.0, 1.0, 2.0})), UnsupportedInputError);
    REQUIRE_THROWS_AS(split(rho, diag_op({0.0, 1.0, 1.0, 2.0})), UnsupportedInputError);
}

TEST_CASE("split of a diagonal state is purely incoherent", "[work]") {
    DenseMatrix r = DenseMatrix::Zero(4, 4);
    r.diagonal() << 0.1, 0.5, 0.15, 0.25;
    const DensityMatrix rho(r, {4});
    const ErgotropyBreakdown b = split(rho, number(4));
    REQUIRE(b.coherent == Approx(0.0).margin(1e-12));
    REQUIRE(b.incoherent == Approx(ergotropy(rho, number(4))).margin(1e-12));
}

TEST_CASE("incoherent part of a pure coherent state", "[work]") {
    const DensityMatrix rho = coherent(16, Complex(1.0, 0.0));
    const Operator h = number(16);
    const ErgotropyBreakdown b = split(rho, h);
    // oracle: sorted-eigenvalue construction on the Poisson diagonal
    std::vector<double> pops(16);
    for (Eigen::Index i = 0; i < 16; ++i) pops[i] = rho.matrix()(i, i).real();
    std::vector<double> sorted = pops;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double energy = 0.0, deph_passive = 0.0;
    for (Eigen::Index i = 0; i < 16; ++i) {
        energy += pops[i] * double(i);
        deph_passive += sorted[i] * double(i);
    }
    REQUIRE(b.incoherent == Approx(energy - deph_passive).margin(1e-10));
    REQUIRE(b.total == Approx(ergotropy(rho, h)).margin(1e-12));
}

TEST_CASE("split is additive and nonnegative on random states", "[work]") {
    std::mt19937 rng(13);
    const Operator h = number(5);
    for (int rep = 0; rep < 100; ++rep) {
        const DensityMatrix rho = random_state(5, rng);
        const ErgotropyBreakdown b = split(rho, h);
        REQUIRE(std::abs(b.total - (b.coherent + b.incoherent)) < 1e-10);
        REQUIRE(b.total >= -1e-10);
        REQUIRE(b.coherent >= -1e-10);
        REQUIRE(b.incoherent >= -1e-10);
    }
}

TEST_CASE("average power definition", "[work]") {
    const std::vector<double> t = {0.0, 1.0, 2.0, 4.0};
    const std::vector<double> w = {0.0, 3.0, 6.0, 12.0};
    const auto p = avg_power(w, t);
    REQUIRE(p[0] == 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) REQUIRE(p[i] == Approx(3.0).margin(1e-14));
    REQUIRE_THROWS_AS(avg_power({1.0, 2.0}, {-1.0, 1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(avg_power({1.0}, {1.0, 2.0}), std::invalid_argument);
}
