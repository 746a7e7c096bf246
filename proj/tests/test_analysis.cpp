// Copyright 2026 The topflux Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "support.hpp"
#include "topflux/analysis.hpp"

namespace topflux {
namespace {

StateVector two_qubit(cplx c00, cplx c01, cplx c10, cplx c11) {
    return StateVector(Eigen::Vector4cd(c00, c01, c10, c11), {2, 2});
}

Matrix random_unitary(int n, std::uint64_t seed) {
    return testing::taylor_expm(testing::random_hermitian(n, seed), 1.0);
}

TEST(Fidelity, Basics) {
    StateVector a = StateVector::basis({2}, 0);
    StateVector b = StateVector::basis({2}, 1);
    EXPECT_DOUBLE_EQ(fidelity(a, a), 1.0);
    EXPECT_DOUBLE_EQ(fidelity(a, b), 0.0);
    StateVector plus(Eigen::Vector2cd(1, 1) / std::sqrt(2.0), {2});
    EXPECT_NEAR(fidelity(a, plus), 0.5, 1e-15);
    EXPECT_THROW(fidelity(a, StateVector::basis({4}, 0)), DimensionError);
}

TEST(LocalZ, SingleQubitClosedForm) {
    StateVector phi(testing::random_vector(4, 3), {2, 2});
    StateVector psi = apply_local_z(phi, {1}, {0.9});
    LocalZFit fit = fidelity_up_to_local_z(psi, phi, {1});
    EXPECT_NEAR(fit.fidelity, 1.0, 1e-12);
    EXPECT_NEAR(fit.angles.at(0), -0.9, 1e-12);
    EXPECT_LT(fidelity(psi, phi), 1.0 - 1e-3);
}

TEST(LocalZ, SeveralQubits) {
    StateVector phi(testing::random_vector(8, 4), {2, 2, 2});
    StateVector psi = apply_local_z(phi, {0, 2}, {2.1, -1.4});
    LocalZFit fit = fidelity_up_to_local_z(psi, phi, {0, 2});
    EXPECT_NEAR(fit.fidelity, 1.0, 1e-6);
}

class LocalZProperty : public ::testing::TestWithParam<int> {};

TEST_P(LocalZProperty, NeverBelowRawFidelity) {
    const auto seed = static_cast<std::uint64_t>(GetParam());
    StateVector psi(testing::random_vector(8, 100 + seed), {2, 2, 2});
    StateVector phi(testing::random_vector(8, 200 + seed), {2, 2, 2});
    const double raw = fidelity(psi, phi);
    EXPECT_GE(fidelity_up_to_local_z(psi, phi, {0}).fidelity, raw - 1e-12);
    EXPECT_GE(fidelity_up_to_local_z(psi, phi, {1, 2}).fidelity, raw - 1e-12);
    // Aligned states: no gain.
    EXPECT_NEAR(fidelity_up_to_local_z(phi, phi, {0, 1}).fidelity, 1.0, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, LocalZProperty, ::testing::Range(0, 10));

TEST(LocalZ, RejectsNonQubitSite) {
    StateVector s(testing::random_vector(6, 1), {2, 3});
    EXPECT_THROW(fidelity_up_to_local_z(s, s, {1}), DimensionError);
}

TEST(Concurrence, PartiallyEntangled) {
    StateVector s = two_qubit(std::sqrt(0.8), 0, 0, std::sqrt(0.2));
    EXPECT_NEAR(concurrence(density(s)), 0.8, 1e-10);
}

TEST(Concurrence, PureStateFormula) {
    // C = 2 |c00 c11 - c01 c10| for pure states.
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Vector v = testing::random_vector(4, 40 + seed);
        const double expect = 2.0 * std::abs(v(0) * v(3) - v(1) * v(2));
        EXPECT_NEAR(concurrence(density(StateVector(v, {2, 2}))), expect, 1e-8);
    }
}

TEST(Concurrence, WernerStates) {
    Vector bell = Vector::Zero(4);
    bell(0) = bell(3) = 1 / std::sqrt(2.0);
    for (double p : {0.0, 0.2, 1.0 / 3.0, 0.5, 0.9, 1.0}) {
        Matrix rho = p * bell * bell.adjoint() + (1 - p) * Matrix::Identity(4, 4) / 4.0;
        EXPECT_NEAR(concurrence(rho), std::max(0.0, (3 * p - 1) / 2), 1e-8);
    }
}

TEST(Concurrence, ProductStateIsZero) {
    StateVector s = kron(StateVector(testing::random_vector(2, 5), {2}), StateVector(testing::random_vector(2, 6), {2}));
    EXPECT_NEAR(concurrence(density(s)), 0.0, 1e-7);
}

TEST(Concurrence, RejectsInvalidInput) {
    Matrix bad = Matrix::Identity(4, 4) / 4.0;
    bad(0, 0) = -0.5;
    bad(1, 1) = 1.0;
    EXPECT_THROW(concurrence(bad), NotPositiveError);
    EXPECT_THROW(concurrence(Matrix::Identity(2, 2)), DimensionError);
}

TEST(Entropy, BellAndProduct) {
    StateVector bell = two_qubit(1 / std::sqrt(2.0), 0, 0, 1 / std::sqrt(2.0));
    EXPECT_NEAR(entanglement_entropy(bell, {0}), 1.0, 1e-12);
    EXPECT_NEAR(entanglement_entropy(StateVector::basis({2, 2}, 1), {1}), 0.0, 1e-12);
    EXPECT_NEAR(von_neumann_entropy(Matrix::Identity(4, 4) / 4.0), 2.0, 1e-12);
}

TEST(Entropy, InvariantUnderLocalUnitaries) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        StateVector s(testing::random_vector(8, 60 + seed), {2, 4});
        const double before = entanglement_entropy(s, {0});
        Matrix u = kron(random_unitary(2, 70 + seed), random_unitary(4, 80 + seed));
        StateVector t(u * s.amplitudes(), {2, 4});
        EXPECT_NEAR(entanglement_entropy(t, {0}), before, 1e-10);
        EXPECT_NEAR(entanglement_entropy(t, {1}), before, 1e-10);
    }
}

TEST(Spectrum, SortedAndNormalized) {
    StateVector s(testing::random_vector(4, 9), {2, 2});
    RealVector ev = density_spectrum(partial_trace(s, {0}));
    EXPECT_NEAR(ev.sum(), 1.0, 1e-12);
    EXPECT_GE(ev.minCoeff(), -1e-12);
}

TEST(Decoupling, ChargeIsExact) {
    for (double k : {1.0, 2.0, 10.0, 100.0}) {
        const double d = ghz(1.0);
        DecouplingComparison c = decoupling_comparison(FluxParams::at_epsilon(d, k * d, 0.5), 100.0);
        EXPECT_EQ(c.charge.residual_gap, 0.0);
        EXPECT_EQ(c.charge.spurious_phase, 0.0);
    }
}

TEST(Decoupling, BiasResidualClosedForm) {
    const long double pi = 3.14159265358979323846264338327950288L;
    const long double d = 2 * pi;
    const long double eps = 10 * d;
    const long double exact = 0.5L * (std::sqrt(eps * eps + d * d) - eps);
    DecouplingComparison c = decoupling_comparison(
        FluxParams::at_epsilon(static_cast<double>(d), static_cast<double>(eps), 0.5), 100.0);
    EXPECT_GT(c.bias.residual_gap, 0.0);
    EXPECT_NEAR(c.bias.residual_gap, static_cast<double>(exact), 1e-12);
    EXPECT_NEAR(c.bias.first_order_gap, static_cast<double>(d * d / (4 * eps)), 1e-12);
    EXPECT_NEAR(c.bias.spurious_phase, 100.0 * c.bias.residual_gap, 1e-12);
    EXPECT_EQ(c.bias.method, DecouplingMethod::bias);
}

TEST(Decoupling, NeedsBias) {
    EXPECT_THROW(decoupling_comparison(FluxParams::at_epsilon(1.0, 0.0, 0.5), 1.0), Error);
}

}  // namespace
}  // namespace topflux
