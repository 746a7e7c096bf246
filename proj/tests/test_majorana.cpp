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

#include "topflux/majorana.hpp"

namespace topflux {
namespace {

Matrix kx(const Operator &a, const Operator &b) {
    return kron(a.matrix(), b.matrix());
}

// Jordan-Wigner Majoranas written out directly.
std::array<Matrix, 4> reference_gammas() {
    const Operator id = Operator::identity(2);
    return {kx(pauli_x(), id), kx(pauli_y(), id), kx(pauli_z(), pauli_x()), kx(pauli_z(), pauli_y())};
}

TEST(Majorana, MatchesJordanWigner) {
    const MajoranaSet ms = majorana_operators();
    const auto ref = reference_gammas();
    for (int k = 0; k < 4; ++k) {
        EXPECT_LT(max_abs(ms.gamma(k + 1).matrix() - ref[k]), 1e-15);
    }
    EXPECT_THROW(ms.gamma(0), DimensionError);
    EXPECT_THROW(ms.gamma(5), DimensionError);
}

TEST(Majorana, CliffordAlgebra) {
    const MajoranaSet ms = majorana_operators();
    const Matrix id = Matrix::Identity(4, 4);
    for (int i = 1; i <= 4; ++i) {
        const Matrix &gi = ms.gamma(i).matrix();
        EXPECT_LT(max_abs(gi - gi.adjoint()), 1e-12);
        EXPECT_LT(max_abs(gi * gi - id), 1e-12);
        for (int j = i + 1; j <= 4; ++j) {
            const Matrix &gj = ms.gamma(j).matrix();
            EXPECT_LT(max_abs(gi * gj + gj * gi), 1e-12);
        }
    }
}

TEST(Majorana, CanonicalAnticommutation) {
    const MajoranaSet ms = majorana_operators();
    const Matrix &f1 = ms.f1.matrix();
    const Matrix &f2 = ms.f2.matrix();
    const Matrix id = Matrix::Identity(4, 4);
    EXPECT_LT(max_abs(f1 * f1.adjoint() + f1.adjoint() * f1 - id), 1e-15);
    EXPECT_LT(max_abs(f2 * f2.adjoint() + f2.adjoint() * f2 - id), 1e-15);
    EXPECT_LT(max_abs(f1 * f2.adjoint() + f2.adjoint() * f1), 1e-15);
    EXPECT_LT(max_abs(f1 * f2 + f2 * f1), 1e-15);
}

TEST(Majorana, ParityIsProductOfGammas) {
    const MajoranaSet ms = majorana_operators();
    Matrix prod = -(ms.gamma(1).matrix() * ms.gamma(2).matrix() * ms.gamma(3).matrix() * ms.gamma(4).matrix());
    EXPECT_LT(max_abs(prod - total_parity().matrix()), 1e-12);
}

TEST(LogicalState, Vectors) {
    LogicalState s{cplx(0.6), cplx(0, 0.8)};
    EXPECT_NEAR(s.odd_island_weight(), 0.64, 1e-15);
    EXPECT_EQ(s.fock_vector()[3], cplx(0, 0.8));
    EXPECT_EQ(s.fock_vector()[1], cplx(0));
    EXPECT_EQ(island_parity(0), 0);
    EXPECT_EQ(island_parity(1), 1);
}

TEST(Braid, SquareIsGammaProduct) {
    const auto g = reference_gammas();
    for (int i = 1; i <= 4; ++i) {
        for (int j = 1; j <= 4; ++j) {
            if (i == j) {
                continue;
            }
            Matrix b = braid_operator(i, j).matrix();
            EXPECT_LT(max_abs(b * b - g[j - 1] * g[i - 1]), 1e-12);
            EXPECT_LT(max_abs(braid_operator(j, i).matrix() * b - Matrix::Identity(4, 4)), 1e-12);
        }
    }
    EXPECT_THROW(braid_operator(2, 2), DimensionError);
}

TEST(Braid, PreservesParity) {
    const Matrix p = total_parity().matrix();
    for (const auto &s : braid_generators()) {
        Matrix b = braid_operator(s.i, s.j).matrix();
        EXPECT_LT(max_abs(b * p - p * b), 1e-12);
    }
}

TEST(Braid, WordOrderFirstStepFirst) {
    BraidWord w{{1, 2}, {2, 3}};
    Matrix expect = braid_operator(2, 3).matrix() * braid_operator(1, 2).matrix();
    EXPECT_LT(max_abs(word_operator(w).matrix() - expect), 1e-15);
    EXPECT_EQ(to_string(w), "[(1,2),(2,3)]");
}

TEST(Braid, ValidateRejectsBadSteps) {
    EXPECT_THROW(validate({{1, 1}}), DimensionError);
    EXPECT_THROW(validate({{0, 2}}), DimensionError);
    EXPECT_THROW(validate({{1, 5}}), DimensionError);
    EXPECT_NO_THROW(validate({{4, 1}}));
}

TEST(LogicalAction, SingleGammaLeaks) {
    EXPECT_THROW(logical_action(majorana_operators().gamma(1)), LeakageError);
}

TEST(LogicalAction, ExchangeOneTwoIsDiagonal) {
    // exp(pi gamma_2 gamma_1 / 4) only sees the island parity.
    Matrix l = logical_action(braid_operator(1, 2)).matrix();
    EXPECT_LT(std::abs(l(0, 1)), 1e-15);
    EXPECT_LT(std::abs(l(1, 0)), 1e-15);
    EXPECT_NEAR(std::abs(std::arg(l(1, 1) / l(0, 0))), kPi / 2, 1e-12);
}

TEST(PhaseEquality, IgnoresGlobalPhase) {
    Matrix h = hadamard().matrix();
    EXPECT_TRUE(equal_up_to_phase(h * std::polar(1.0, 0.3), h));
    EXPECT_FALSE(equal_up_to_phase(t_gate().matrix(), Matrix::Identity(2, 2)));
    EXPECT_FALSE(equal_up_to_phase(h, Matrix::Identity(3, 3)));
}

TEST(BraidGroup, HasTwentyFourElements) {
    EXPECT_EQ(braid_group().size(), 24u);
}

TEST(BraidGroup, ClosedUnderProducts) {
    const auto &g = braid_group();
    for (const auto &a : g) {
        for (const auto &b : g) {
            Matrix p = a.logical * b.logical;
            bool found = std::any_of(g.begin(), g.end(),
                                     [&](const CliffordElement &e) { return equal_up_to_phase(e.logical, p); });
            EXPECT_TRUE(found);
        }
    }
}

TEST(BraidGroup, WordsReproduceElements) {
    for (const auto &e : braid_group()) {
        EXPECT_TRUE(equal_up_to_phase(braid_logical(e.word).matrix(), e.logical));
    }
}

TEST(Compile, RoundTripsEveryElement) {
    for (const auto &e : braid_group()) {
        BraidWord w = compile_clifford(Operator(e.logical));
        EXPECT_TRUE(equal_up_to_phase(braid_logical(w).matrix(), e.logical));
        EXPECT_LE(w.size(), e.word.size());
    }
}

TEST(Compile, HadamardWord) {
    BraidWord w = compile_clifford(hadamard());
    EXPECT_EQ(to_string(w), "[(1,2),(2,3),(1,2)]");
    // Explicit product of the three exchange operators.
    const auto g = reference_gammas();
    const Matrix id = Matrix::Identity(4, 4);
    Matrix b12 = (id + g[1] * g[0]) / std::sqrt(2.0);
    Matrix b23 = (id + g[2] * g[1]) / std::sqrt(2.0);
    Matrix u = b12 * b23 * b12;
    Matrix l(2, 2);
    l << u(0, 0), u(0, 3), u(3, 0), u(3, 3);
    EXPECT_TRUE(equal_up_to_phase(l, hadamard().matrix()));
}

TEST(Compile, PauliGates) {
    for (const Operator &p : {pauli_x(), pauli_y(), pauli_z(), Operator::identity(2)}) {
        BraidWord w = compile_clifford(p);
        EXPECT_TRUE(equal_up_to_phase(braid_logical(w).matrix(), p.matrix()));
    }
    EXPECT_TRUE(compile_clifford(Operator::identity(2)).empty());
}

TEST(Compile, TGateIsNotRepresentable) {
    EXPECT_THROW(compile_clifford(t_gate()), NotRepresentableError);
}

TEST(Compile, RejectsBadTargets) {
    EXPECT_THROW(compile_clifford(Operator::identity(4)), DimensionError);
    EXPECT_THROW(compile_clifford(Operator(Matrix::Identity(2, 2) * 2.0)), Error);
}

}  // namespace
}  // namespace topflux
