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
#include "topflux/dynamics.hpp"

namespace topflux {
namespace {

TEST(SweepSchedule, LinearProfile) {
    SweepSchedule s{-4.0, 4.0, 2.0, SweepShape::linear};
    EXPECT_DOUBLE_EQ(s.velocity(), 4.0);
    EXPECT_DOUBLE_EQ(s.epsilon_at(0.0), -4.0);
    EXPECT_DOUBLE_EQ(s.epsilon_at(1.0), 0.0);
    EXPECT_DOUBLE_EQ(s.epsilon_at(2.0), 4.0);
    EXPECT_DOUBLE_EQ(s.epsilon_at(5.0), 4.0);
    EXPECT_TRUE(s.crosses_zero());
    EXPECT_FALSE((SweepSchedule{1.0, 2.0, 1.0}).crosses_zero());
}

TEST(SweepSchedule, SmoothProfile) {
    SweepSchedule s{0.0, 1.0, 1.0, SweepShape::smooth};
    EXPECT_EQ(s.progress(0.0), 0.0);
    EXPECT_EQ(s.progress(1.0), 1.0);
    EXPECT_DOUBLE_EQ(s.progress(0.5), 0.5);
    for (double t : {0.1, 0.3, 0.45}) {
        EXPECT_NEAR(s.progress(t) + s.progress(1.0 - t), 1.0, 1e-15);
    }
    // Zero first and second derivative at the ends.
    const double h = 1e-4;
    EXPECT_LT(s.progress(h), 1e-10);
    EXPECT_STREQ(to_string(SweepShape::smooth), "smooth");
}

TEST(SweepSchedule, Validation) {
    EXPECT_THROW((SweepSchedule{0.0, 1.0, 0.0}).validate(), Error);
    EXPECT_THROW((SweepSchedule{0.0, std::nan(""), 1.0}).validate(), Error);
}

TEST(Evolve, ConstantHamiltonianMatchesExponential) {
    Matrix h = testing::random_hermitian(3, 21);
    Operator hop = Operator::hermitian(h);
    StateVector psi0(testing::random_vector(3, 22), {3});
    Trajectory tr = evolve([&](double) { return hop; }, psi0, 2.5);
    Vector expect = testing::taylor_expm(h, 2.5) * psi0.amplitudes();
    EXPECT_LT((tr.final_state().amplitudes() - expect).norm(), 1e-9);
    EXPECT_LT(tr.max_norm_error(), 1e-9);
    EXPECT_EQ(tr.times.front(), 0.0);
    EXPECT_EQ(tr.times.back(), 2.5);
}

TEST(Evolve, TimeDependentMatchesFineReference) {
    // Driven qubit; reference is a very fine midpoint product.
    auto h = [](double t) { return flux_hamiltonian(3.0 * std::sin(t), 1.0); };
    StateVector psi0 = StateVector::basis({2}, 0);
    Trajectory tr = evolve(h, psi0, 3.0, {1e-10});
    Matrix ref = Matrix::Identity(2, 2);
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double t = (k + 0.5) * 3.0 / n;
        ref = testing::taylor_expm(h(t).matrix(), 3.0 / n) * ref;
    }
    EXPECT_LT((tr.final_state().amplitudes() - ref.col(0)).norm(), 1e-7);
}

TEST(Evolve, RejectsBadInput) {
    auto h = [](double) { return Operator::hermitian(Matrix::Identity(2, 2)); };
    EXPECT_THROW(evolve(h, StateVector(Vector::Ones(2), {2}), 1.0), Error);
    EXPECT_THROW(evolve(h, StateVector::basis({2}, 0), -1.0), Error);
    auto general = [](double) { return Operator(Matrix::Identity(2, 2)); };
    EXPECT_THROW(evolve(general, StateVector::basis({2}, 0), 1.0), NonHermitianError);
}

TEST(Evolve, ZeroDuration) {
    auto h = [](double) { return flux_hamiltonian(1.0, 1.0); };
    Trajectory tr = evolve(h, StateVector::basis({2}, 1), 0.0);
    EXPECT_EQ(tr.final_state()[1], cplx(1.0));
}

TEST(Evolve, ConvergenceFailure) {
    auto h = [](double t) { return flux_hamiltonian(50.0 * t, 1.0); };
    EvolveOptions o;
    o.tol = 1e-14;
    o.initial_steps = 2;
    o.max_doublings = 2;
    EXPECT_THROW(evolve(h, StateVector::basis({2}, 0), 3.0, o), ConvergenceError);
    EXPECT_THROW(propagate(h, 2, 3.0, o), ConvergenceError);
}

TEST(Propagate, MatchesEvolveColumns) {
    auto h = [](double t) { return flux_hamiltonian(2.0 * t - 3.0, 0.7); };
    Propagator p = propagate(h, 2, 3.0, {1e-10});
    Trajectory tr = evolve(h, StateVector::basis({2}, 1), 3.0, {1e-10});
    EXPECT_LT((p.unitary.matrix().col(1) - tr.final_state().amplitudes()).norm(), 1e-8);
    EXPECT_TRUE(p.unitary.is_unitary());
}

TEST(LandauZener, Formula) {
    EXPECT_DOUBLE_EQ(lz_probability(2.0, 3.0), std::exp(-2.0 * kPi * 4.0 / 12.0));
    EXPECT_EQ(lz_probability(0.0, 1.0), 1.0);
    EXPECT_THROW(lz_probability(1.0, 0.0), Error);
    EXPECT_DOUBLE_EQ(lz_exponent(2.0, 3.0), 2.0 * kPi * 4.0 / 12.0);
}

TEST(LandauZener, MinSweepTimeValues) {
    // eps = 2 Delta_max = 2 x 2 pi GHz: about 0.4 ns.
    EXPECT_NEAR(min_sweep_time(ghz(1.0), ghz(2.0), 1.0), 0.405, 0.01);
    // eps = 10 Delta_1 = 20 x 2 pi GHz: about 1 ns.
    EXPECT_NEAR(min_sweep_time(ghz(2.0), ghz(20.0), 1.0), 1.01, 0.02);
    EXPECT_THROW(min_sweep_time(0.0, 1.0, 1.0), Error);
}

TEST(LandauZener, MinSweepTimeGivesTargetExponent) {
    const double d = 1.7;
    const double eps = 9.0;
    const double t = min_sweep_time(d, eps, 2.5);
    EXPECT_NEAR(lz_exponent(d, 2.0 * eps / t), 2.5, 1e-12);
}

TEST(SimulateSweep, AgreesWithFormula) {
    const double d = ghz(1.0);
    for (double v : {5.0, 50.0}) {
        const double eps = 10.0 * d;
        SweepSchedule s{-eps, eps, 2.0 * eps / v};
        SweepResult r = simulate_sweep(d, s);
        EXPECT_NEAR(r.probability, lz_probability(d, v), 0.02);
        EXPECT_LT(std::abs(r.probability - r.coarse_probability), 1e-8);
        EXPECT_LT(r.trajectory.max_norm_error(), 1e-9);
    }
}

TEST(SimulateSweep, ZeroGapIsFullyDiabatic) {
    SweepSchedule s{-10.0, 10.0, 3.0};
    SweepResult r = simulate_sweep(0.0, s);
    EXPECT_NEAR(r.probability, 1.0, 1e-9);
}

TEST(SimulateSweep, SlowSweepIsAdiabatic) {
    SweepSchedule s{-20.0, 20.0, 200.0};
    EXPECT_LT(simulate_sweep(2.0, s).probability, 1e-6);
}

TEST(DiabaticProbability, DegenerateEndpointThrows) {
    Trajectory tr;
    tr.times = {0.0};
    tr.states = {StateVector::basis({2}, 0)};
    EXPECT_THROW(diabatic_transition_probability(tr, flux_hamiltonian(1.0, 0.0), flux_hamiltonian(0.0, 0.0)),
                 DegeneracyError);
    EXPECT_THROW(diabatic_transition_probability(tr, flux_hamiltonian(0.0, 0.0), flux_hamiltonian(1.0, 0.0)),
                 DegeneracyError);
}

}  // namespace
}  // namespace topflux
