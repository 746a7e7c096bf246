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
#include "topflux/qmath.hpp"

namespace topflux {
namespace {

using testing::random_hermitian;
using testing::random_matrix;
using testing::random_vector;

TEST(Operator, RejectsNonHermitianFlag) {
    Matrix m(2, 2);
    m << 0, 1, 0, 0;
    EXPECT_THROW(Operator::hermitian(m), NonHermitianError);
    EXPECT_NO_THROW((void)Operator(m));
}

TEST(Operator, RejectsNonUnitaryFlag) {
    Matrix m = Matrix::Identity(2, 2) * 1.1;
    EXPECT_THROW(Operator::unitary(m), Error);
}

TEST(Operator, RejectsNonSquare) {
    EXPECT_THROW(Operator(Matrix::Zero(2, 3)), DimensionError);
}

TEST(Operator, ProductDimensionMismatch) {
    EXPECT_THROW(Operator::identity(2) * Operator::identity(4), DimensionError);
}

TEST(StateVector, DimsMustMatch) {
    EXPECT_THROW(StateVector(Vector::Zero(4), {2, 3}), DimensionError);
    EXPECT_THROW(StateVector::basis({2, 2}, 4), DimensionError);
}

TEST(Kron, MatchesIndexFormula) {
    Matrix a = random_matrix(2, 3, 1);
    Matrix b = random_matrix(3, 2, 2);
    Matrix k = kron(a, b);
    ASSERT_EQ(k.rows(), 6);
    ASSERT_EQ(k.cols(), 6);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            EXPECT_EQ(k(i, j), a(i / 3, j / 2) * b(i % 3, j % 2));
        }
    }
}

TEST(Kron, StatesCarryDims) {
    StateVector s = kron(StateVector::basis({2}, 1), StateVector::basis({2, 2}, 2));
    EXPECT_EQ(s.dims(), (std::vector<int>{2, 2, 2}));
    EXPECT_EQ(s[6], cplx(1.0));
}

TEST(Embed, EqualsExplicitKron) {
    const std::vector<int> dims{2, 2, 2};
    Operator e = embed(pauli_x(), 1, dims);
    Matrix expect = kron(Matrix::Identity(2, 2), kron(pauli_x().matrix(), Matrix::Identity(2, 2)));
    EXPECT_LT(max_abs(e.matrix() - expect), 1e-15);
}

TEST(ControlledBlocks, BlockDiagonal) {
    const std::array<Operator, 2> blocks{pauli_x(), pauli_z()};
    Matrix m = controlled_blocks(blocks).matrix();
    Matrix expect = Matrix::Zero(4, 4);
    expect.block(0, 0, 2, 2) = pauli_x().matrix();
    expect.block(2, 2, 2, 2) = pauli_z().matrix();
    EXPECT_EQ(m, expect);
}

TEST(Pauli, Algebra) {
    Matrix x = pauli_x().matrix();
    Matrix y = pauli_y().matrix();
    Matrix z = pauli_z().matrix();
    EXPECT_LT(max_abs(x * y - kI * z), 1e-15);
    EXPECT_LT(max_abs(x * x - Matrix::Identity(2, 2)), 1e-15);
}

TEST(Eigh, RequiresHermitianFlag) {
    EXPECT_THROW(eigh(Operator(Matrix::Identity(2, 2))), Error);
}

class EighProperty : public ::testing::TestWithParam<int> {};

TEST_P(EighProperty, DecomposesRandomHermitian) {
    const int seed = GetParam();
    const int n = 2 + seed % 5;
    Matrix h = random_hermitian(n, static_cast<std::uint64_t>(seed));
    Eigensystem es = eigh(Operator::hermitian(h));
    const Matrix &v = es.vectors.matrix();
    EXPECT_LT(max_abs(v.adjoint() * v - Matrix::Identity(n, n)), 1e-12);
    EXPECT_LT(max_abs(h * v - v * es.values.cast<cplx>().asDiagonal()), 1e-11);
    for (int k = 1; k < n; ++k) {
        EXPECT_LE(es.values(k - 1), es.values(k));
    }
    for (int c = 0; c < n; ++c) {
        int first = 0;
        while (std::abs(v(first, c)) <= 1e-9) {
            ++first;
        }
        EXPECT_EQ(v(first, c).imag(), 0.0);
        EXPECT_GT(v(first, c).real(), 0.0);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, EighProperty, ::testing::Range(0, 12));

class ExpmProperty : public ::testing::TestWithParam<int> {};

TEST_P(ExpmProperty, MatchesTaylorSeries) {
    const int seed = GetParam();
    const int n = 2 + seed % 6;
    Matrix h = random_hermitian(n, static_cast<std::uint64_t>(100 + seed));
    const double t = 0.3 + 0.7 * seed;
    Operator u = expm_unitary(Operator::hermitian(h), t);
    EXPECT_TRUE(u.is_unitary());
    EXPECT_LT(max_abs(u.matrix() - testing::taylor_expm(h, t)), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Seeds, ExpmProperty, ::testing::Range(0, 12));

TEST(Expm, BlockStructureMatchesDense) {
    // Two 2x2 blocks, a 1x1 block and a 3x3 block, interleaved.
    Matrix h = Matrix::Zero(8, 8);
    Matrix a = random_hermitian(2, 7);
    Matrix b = random_hermitian(3, 8);
    const int ia[2] = {0, 5};
    const int ib[3] = {1, 3, 7};
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            h(ia[r], ia[c]) = a(r, c);
        }
    }
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            h(ib[r], ib[c]) = b(r, c);
        }
    }
    h(2, 2) = 0.7;
    h(4, 4) = -1.3;
    h(6, 6) = 2.0;
    Operator u = expm_unitary(Operator::hermitian(h), 1.7);
    EXPECT_LT(max_abs(u.matrix() - testing::taylor_expm(h, 1.7)), 1e-10);
}

TEST(Expm, ZeroTimeIsIdentity) {
    Operator u = expm_unitary(Operator::hermitian(random_hermitian(3, 5)), 0.0);
    EXPECT_LT(max_abs(u.matrix() - Matrix::Identity(3, 3)), 1e-15);
}

TEST(PartialTrace, MatchesIndexSums) {
    const std::vector<int> dims{2, 3, 2};
    Vector psi = random_vector(12, 11);
    StateVector s(psi, dims);
    for (const std::vector<int> &keep : {std::vector<int>{0}, std::vector<int>{1}, std::vector<int>{0, 2},
                                         std::vector<int>{1, 2}, std::vector<int>{0, 1, 2}}) {
        Matrix got = partial_trace(s, std::span<const int>(keep));
        Matrix want = testing::brute_partial_trace(psi, dims, keep);
        EXPECT_LT(max_abs(got - want), 1e-14);
        EXPECT_NEAR(got.trace().real(), 1.0, 1e-12);
    }
}

TEST(PartialTrace, ProductStateIsPure) {
    StateVector s = kron(StateVector(random_vector(2, 1), {2}), StateVector(random_vector(2, 2), {2}));
    EXPECT_NEAR(purity(partial_trace(s, {0})), 1.0, 1e-14);
}

TEST(PartialTrace, BellStateIsMixed) {
    Vector v = Vector::Zero(4);
    v(0) = v(3) = 1 / std::sqrt(2.0);
    EXPECT_NEAR(purity(partial_trace(StateVector(v, {2, 2}), {1})), 0.5, 1e-15);
}

}  // namespace
}  // namespace topflux
