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

// Four-Majorana algebra, the even-parity topological qubit and braid
// compilation of single-qubit Clifford gates.
//
// Fock basis |n1 n2> ordered (|00>, |01>, |10>, |11>), index = 2*n1 + n2.
// Jordan-Wigner construction:
//   f1 = a (x) I,   f2 = Z (x) a,   a = |0><1|,   Z = diag(1, -1)
//   gamma1 = f1 + f1^dag = X (x) I,   gamma2 = -i(f1 - f1^dag) = Y (x) I
//   gamma3 = f2 + f2^dag = Z (x) X,   gamma4 = -i(f2 - f2^dag) = Z (x) Y
// The logical qubit lives on span{|00>, |11>}; mode 1 is the island mode, so
// logical |0> has island parity 0 and logical |1> has island parity 1.

#pragma once

#include <array>
#include <deque>
#include <string>
#include <vector>

#include "topflux/qmath.hpp"

namespace topflux {

class LeakageError : public Error {
   public:
    using Error::Error;
};

class NotRepresentableError : public Error {
   public:
    using Error::Error;
};

struct MajoranaSet {
    std::array<Operator, 4> gammas;  ///< gamma_1..gamma_4 stored at 0..3
    Operator f1;                     ///< annihilator of mode 1 (island mode)
    Operator f2;                     ///< annihilator of mode 2

    const Operator &gamma(int index) const {
        if (index < 1 || index > 4) {
            throw DimensionError("Majorana index must be in 1..4");
        }
        return gammas[index - 1];
    }
};

inline MajoranaSet majorana_operators() {
    Matrix lower(2, 2);
    lower << 0, 1, 0, 0;
    const Matrix id = Matrix::Identity(2, 2);
    const Matrix z = pauli_z().matrix();

    Matrix f1 = kron(lower, id);
    Matrix f2 = kron(z, lower);

    MajoranaSet out;
    out.f1 = Operator(f1);
    out.f2 = Operator(f2);
    out.gammas[0] = Operator::hermitian(f1 + f1.adjoint());
    out.gammas[1] = Operator::hermitian(-kI * (f1 - f1.adjoint()));
    out.gammas[2] = Operator::hermitian(f2 + f2.adjoint());
    out.gammas[3] = Operator::hermitian(-kI * (f2 - f2.adjoint()));
    return out;
}

/// Total fermion parity (-1)^(n1 + n2) = -gamma1 gamma2 gamma3 gamma4.
inline Operator total_parity() {
    return Operator(Matrix(Eigen::Vector4cd(1, -1, -1, 1).asDiagonal()), OpKind::hermitian);
}

/// Projector onto the even-parity (logical) sector.
inline Matrix even_projector() {
    return Matrix(Eigen::Vector4cd(1, 0, 0, 1).asDiagonal());
}

/// c1|00> + c2|11>.
struct LogicalState {
    cplx c1{1.0, 0.0};
    cplx c2{0.0, 0.0};

    /// Probability that the island mode is occupied (n_p = 1).
    double odd_island_weight() const {
        return std::norm(c2);
    }

    StateVector logical_vector() const {
        return StateVector(Eigen::Vector2cd(c1, c2), {2});
    }

    StateVector fock_vector() const {
        return StateVector(Eigen::Vector4cd(c1, 0, 0, c2), {2, 2});
    }
};

/// Island parity n_p of a logical basis index (0 for |00>, 1 for |11>).
inline int island_parity(int logical_index) {
    return logical_index == 0 ? 0 : 1;
}

struct BraidStep {
    int i;
    int j;
    friend bool operator==(const BraidStep &, const BraidStep &) = default;
};

/// Ordered sequence of exchanges; the first step is applied first.
using BraidWord = std::vector<BraidStep>;

inline void validate(const BraidWord &word) {
    for (const auto &s : word) {
        if (s.i < 1 || s.i > 4 || s.j < 1 || s.j > 4 || s.i == s.j) {
            throw DimensionError("braid step indices must be distinct and in 1..4");
        }
    }
}

inline std::string to_string(const BraidWord &word) {
    std::string out = "[";
    for (size_t k = 0; k < word.size(); ++k) {
        if (k) {
            out += ",";
        }
        out += "(" + std::to_string(word[k].i) + "," + std::to_string(word[k].j) + ")";
    }
    return out + "]";
}

/// exp(pi gamma_j gamma_i / 4) = (I + gamma_j gamma_i) / sqrt(2).
/// braid_operator(j, i) is the inverse exchange.
inline Operator braid_operator(int i, int j) {
    if (i == j) {
        throw DimensionError("braid_operator: indices must differ");
    }
    static const MajoranaSet ms = majorana_operators();
    const Matrix prod = ms.gamma(j).matrix() * ms.gamma(i).matrix();
    return Operator((Matrix::Identity(4, 4) + prod) / std::sqrt(2.0), OpKind::unitary);
}

inline Operator word_operator(const BraidWord &word) {
    validate(word);
    Operator u = Operator::identity(4);
    for (const auto &s : word) {
        u = braid_operator(s.i, s.j) * u;
    }
    return u;
}

inline constexpr double kLeakageTol = 1e-8;

/// Restriction of a 4x4 Fock-space unitary to span{|00>, |11>}.
inline Operator logical_action(const Operator &u) {
    if (u.dim() != 4) {
        throw DimensionError("logical_action expects a 4x4 operator");
    }
    const std::array<int, 2> idx{0, 3};
    Matrix r(2, 2);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            r(a, b) = u(idx[a], idx[b]);
        }
    }
    if (max_abs(r.adjoint() * r - Matrix::Identity(2, 2)) > kLeakageTol) {
        throw LeakageError("operator mixes the logical sector with odd parity states");
    }
    return Operator(std::move(r), OpKind::unitary);
}

/// Divides out the phase of the largest-magnitude entry (first in row-major
/// order among entries within 1e-9 of the maximum).
inline Matrix phase_align(const Matrix &m) {
    double best = max_abs(m);
    if (best == 0.0) {
        return m;
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (std::abs(m(r, c)) >= best - 1e-9) {
                return m * (std::abs(m(r, c)) / m(r, c));
            }
        }
    }
    return m;
}

/// True when a = e^{i phi} b for some phi, entrywise within `tol`.
inline bool equal_up_to_phase(const Matrix &a, const Matrix &b, double tol = 1e-10) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        return false;
    }
    cplx overlap = (b.adjoint() * a).trace();
    cplx phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : cplx(1.0);
    return max_abs(a - phase * b) < tol;
}

struct CliffordElement {
    BraidWord word;
    Matrix logical;
};

/// Exchange generators in lexicographic order: (1,2),(2,1),(2,3),(3,2),(3,4),(4,3).
inline std::vector<BraidStep> braid_generators() {
    return {{1, 2}, {2, 1}, {2, 3}, {3, 2}, {3, 4}, {4, 3}};
}

/// Breadth-first closure of the logical image of the braid group, modulo
/// global phase. Each element carries the lexicographically smallest among
/// its shortest words.
inline std::vector<CliffordElement> enumerate_braid_group() {
    const auto gens = braid_generators();
    std::vector<Matrix> gen_logical;
    for (const auto &g : gens) {
        gen_logical.push_back(logical_action(braid_operator(g.i, g.j)).matrix());
    }

    std::vector<CliffordElement> found{{BraidWord{}, Matrix::Identity(2, 2)}};
    std::deque<size_t> frontier{0};
    while (!frontier.empty()) {
        size_t cur = frontier.front();
        frontier.pop_front();
        for (size_t g = 0; g < gens.size(); ++g) {
            Matrix next = gen_logical[g] * found[cur].logical;
            bool seen = std::any_of(found.begin(), found.end(),
                                    [&](const CliffordElement &e) { return equal_up_to_phase(e.logical, next); });
            if (!seen) {
                BraidWord w = found[cur].word;
                w.push_back(gens[g]);
                found.push_back({std::move(w), std::move(next)});
                frontier.push_back(found.size() - 1);
            }
        }
    }
    return found;
}

inline const std::vector<CliffordElement> &braid_group() {
    static const std::vector<CliffordElement> group = enumerate_braid_group();
    return group;
}

/// Shortest braid word whose logical action equals `target` up to a global phase.
inline BraidWord compile_clifford(const Operator &target) {
    if (target.dim() != 2) {
        throw DimensionError("compile_clifford expects a 2x2 target");
    }
    const Matrix &t = target.matrix();
    if (max_abs(t.adjoint() * t - Matrix::Identity(2, 2)) > kUnitaryTol) {
        throw Error("compile_clifford: target is not unitary");
    }
    for (const auto &e : braid_group()) {
        if (equal_up_to_phase(e.logical, t)) {
            return e.word;
        }
    }
    throw NotRepresentableError("target is not in the braid-generated Clifford group");
}

inline Operator hadamard() {
    Matrix h(2, 2);
    h << 1, 1, 1, -1;
    return Operator(h / std::sqrt(2.0), OpKind::unitary);
}

inline Operator t_gate() {
    Matrix t(2, 2);
    t << 1, 0, 0, std::polar(1.0, kPi / 4);
    return Operator(t, OpKind::unitary);
}

/// Logical action of a braid word, as a 2x2 unitary on (|0>, |1>).
inline Operator braid_logical(const BraidWord &word) {
    return logical_action(word_operator(word));
}

}  // namespace topflux
