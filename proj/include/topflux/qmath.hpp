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

// Dense complex linear algebra for the few-qubit Hilbert spaces used by the
// simulator (dimension 2 to 8).
//
// Units: hbar = 1, energies in rad/ns, times in ns.
//
// Basis conventions (used everywhere in the library):
//   flux qubit, diabatic basis:   index 0 = |L>, index 1 = |R>
//   flux qubit, energy basis:     index 0 = |g>, index 1 = |e>
//   topological logical qubit:    index 0 = |0> = |00>, index 1 = |1> = |11>
//   tensor order:                 topological (x) flux1 (x) flux2
// The leftmost factor is the most significant index.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace topflux {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class NonHermitianError : public Error {
   public:
    using Error::Error;
};

class DimensionError : public Error {
   public:
    using Error::Error;
};

/// Largest absolute entry. Zero for empty matrices.
inline double max_abs(const Matrix &m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix &m) {
    return m.allFinite();
}

enum class OpKind { general, hermitian, unitary };

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;

/// Square complex matrix with checked structural flags.
///
/// A hermitian flag is verified on construction (||A - A^dag||_max below
/// 1e-12, relative to the largest entry when that exceeds one) and the stored
/// matrix is then symmetrized exactly. A unitary flag is verified against
/// ||U^dag U - I||_max < 1e-10.
class Operator {
   public:
    Operator() = default;

    explicit Operator(Matrix m, OpKind kind = OpKind::general) : m_(std::move(m)), kind_(kind) {
        if (m_.rows() != m_.cols()) {
            throw DimensionError("operator must be square");
        }
        if (!all_finite(m_)) {
            throw Error("operator has non-finite entries");
        }
        if (kind_ == OpKind::hermitian) {
            double scale = std::max(1.0, max_abs(m_));
            if (max_abs(m_ - m_.adjoint()) >= kHermitianTol * scale) {
                throw NonHermitianError("operator flagged hermitian is not hermitian");
            }
            Matrix sym = (m_ + m_.adjoint()) * 0.5;
            m_ = std::move(sym);
        } else if (kind_ == OpKind::unitary) {
            Matrix id = Matrix::Identity(m_.rows(), m_.cols());
            if (max_abs(m_.adjoint() * m_ - id) >= kUnitaryTol) {
                throw Error("operator flagged unitary is not unitary");
            }
        }
    }

    static Operator identity(int dim) {
        return Operator(Matrix::Identity(dim, dim), OpKind::unitary);
    }

    static Operator hermitian(Matrix m) {
        return Operator(std::move(m), OpKind::hermitian);
    }

    static Operator unitary(Matrix m) {
        return Operator(std::move(m), OpKind::unitary);
    }

    int dim() const {
        return static_cast<int>(m_.rows());
    }
    const Matrix &matrix() const {
        return m_;
    }
    cplx operator()(int r, int c) const {
        return m_(r, c);
    }
    OpKind kind() const {
        return kind_;
    }
    bool is_hermitian() const {
        return kind_ == OpKind::hermitian;
    }
    bool is_unitary() const {
        return kind_ == OpKind::unitary;
    }

    Operator adjoint() const {
        return Operator(m_.adjoint(), kind_);
    }

    friend Operator operator*(const Operator &a, const Operator &b) {
        if (a.dim() != b.dim()) {
            throw DimensionError("operator product dimension mismatch");
        }
        bool unit = a.is_unitary() && b.is_unitary();
        return Operator(a.m_ * b.m_, unit ? OpKind::unitary : OpKind::general);
    }

   private:
    Matrix m_;
    OpKind kind_ = OpKind::general;
};

/// Pure state on a tensor product space. `dims` lists the subsystem
/// dimensions, most significant first; their product equals the vector size.
class StateVector {
   public:
    StateVector() = default;

    StateVector(Vector amplitudes, std::vector<int> dims) : amps_(std::move(amplitudes)), dims_(std::move(dims)) {
        if (dims_.empty()) {
            dims_ = {static_cast<int>(amps_.size())};
        }
        long prod = 1;
        for (int d : dims_) {
            if (d <= 0) {
                throw DimensionError("subsystem dimensions must be positive");
            }
            prod *= d;
        }
        if (prod != amps_.size() || prod == 0) {
            throw DimensionError("subsystem dimensions do not match the amplitude count");
        }
        if (!amps_.allFinite()) {
            throw Error("state has non-finite amplitudes");
        }
    }

    explicit StateVector(Vector amplitudes) : StateVector(std::move(amplitudes), {}) {
    }

    static StateVector basis(std::vector<int> dims, int index) {
        long n = std::accumulate(dims.begin(), dims.end(), 1L, std::multiplies<>());
        if (index < 0 || index >= n) {
            throw DimensionError("basis index out of range");
        }
        Vector v = Vector::Zero(n);
        v(index) = 1.0;
        return StateVector(std::move(v), std::move(dims));
    }

    int dim() const {
        return static_cast<int>(amps_.size());
    }
    const std::vector<int> &dims() const {
        return dims_;
    }
    const Vector &amplitudes() const {
        return amps_;
    }
    cplx operator[](int i) const {
        return amps_(i);
    }
    double norm() const {
        return amps_.norm();
    }

    StateVector normalized() const {
        double n = norm();
        if (n == 0.0) {
            throw Error("cannot normalize the zero vector");
        }
        return StateVector(amps_ / n, dims_);
    }

    friend StateVector operator*(const Operator &op, const StateVector &s) {
        if (op.dim() != s.dim()) {
            throw DimensionError("operator/state dimension mismatch");
        }
        return StateVector(op.matrix() * s.amps_, s.dims_);
    }

   private:
    Vector amps_;
    std::vector<int> dims_;
};

inline Operator pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return Operator(m, OpKind::hermitian);
}

inline Operator pauli_y() {
    Matrix m(2, 2);
    m << 0, -kI, kI, 0;
    return Operator(m, OpKind::hermitian);
}

inline Operator pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return Operator(m, OpKind::hermitian);
}

inline Matrix kron(const Matrix &a, const Matrix &b) {
    const Eigen::Index p = b.rows();
    const Eigen::Index q = b.cols();
    Matrix out(a.rows() * p, a.cols() * q);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * p, j * q, p, q) = a(i, j) * b;
        }
    }
    return out;
}

/// Tensor product; hermitian/unitary flags survive when both factors carry them.
inline Operator kron(const Operator &a, const Operator &b) {
    OpKind kind = OpKind::general;
    if (a.is_hermitian() && b.is_hermitian()) {
        kind = OpKind::hermitian;
    } else if (a.is_unitary() && b.is_unitary()) {
        kind = OpKind::unitary;
    }
    return Operator(kron(a.matrix(), b.matrix()), kind);
}

inline StateVector kron(const StateVector &a, const StateVector &b) {
    std::vector<int> dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    return StateVector(kron(Matrix(a.amplitudes()), Matrix(b.amplitudes())).col(0), std::move(dims));
}

/// Embeds a single-subsystem operator at position `site` of the tensor product `dims`.
inline Operator embed(const Operator &op, int site, std::span<const int> dims) {
    if (site < 0 || site >= static_cast<int>(dims.size()) || dims[site] != op.dim()) {
        throw DimensionError("embed: site out of range or dimension mismatch");
    }
    Operator out = Operator::identity(1);
    for (int k = 0; k < static_cast<int>(dims.size()); ++k) {
        out = kron(out, k == site ? op : Operator::identity(dims[k]));
    }
    return Operator(out.matrix(), op.kind());
}

/// Block-diagonal operator sum_k |k><k| (x) blocks[k], with the control as the
/// leading tensor factor.
inline Operator controlled_blocks(std::span<const Operator> blocks) {
    if (blocks.empty()) {
        throw DimensionError("controlled_blocks: no blocks");
    }
    const int d = blocks[0].dim();
    const int n = static_cast<int>(blocks.size());
    Matrix m = Matrix::Zero(n * d, n * d);
    bool herm = true;
    bool unit = true;
    for (int k = 0; k < n; ++k) {
        if (blocks[k].dim() != d) {
            throw DimensionError("controlled_blocks: blocks differ in dimension");
        }
        m.block(k * d, k * d, d, d) = blocks[k].matrix();
        herm = herm && blocks[k].is_hermitian();
        unit = unit && blocks[k].is_unitary();
    }
    return Operator(std::move(m), herm ? OpKind::hermitian : (unit ? OpKind::unitary : OpKind::general));
}

struct Eigensystem {
    RealVector values;  ///< ascending
    Operator vectors;   ///< unitary, column k is the eigenvector of values[k]
};

/// Fixes the phase freedom of each column: the first entry whose magnitude
/// exceeds 1e-9 is made real and positive.
inline void canonicalize_columns(Matrix &v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            double mag = std::abs(v(r, c));
            if (mag > 1e-9) {
                v.col(c) *= std::conj(v(r, c)) / mag;
                v(r, c) = mag;
                break;
            }
        }
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending.
inline Eigensystem eigh(const Operator &h) {
    if (!h.is_hermitian()) {
        throw NonHermitianError("eigh requires an operator flagged hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix());
    if (solver.info() != Eigen::Success) {
        throw Error("eigh: eigensolver did not converge");
    }
    Matrix v = solver.eigenvectors();
    canonicalize_columns(v);
    return Eigensystem{solver.eigenvalues(), Operator(std::move(v), OpKind::unitary)};
}

namespace detail {

/// Connected components of the nonzero pattern of a square matrix.
inline std::vector<std::vector<int>> coupled_blocks(const Matrix &m) {
    const int n = static_cast<int>(m.rows());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (m(i, j) != cplx(0.0) || m(j, i) != cplx(0.0)) {
                parent[find(i)] = find(j);
            }
        }
    }
    std::vector<std::vector<int>> blocks;
    std::vector<int> slot(n, -1);
    for (int i = 0; i < n; ++i) {
        int r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<int>(blocks.size());
            blocks.emplace_back();
        }
        blocks[slot[r]].push_back(i);
    }
    return blocks;
}

/// exp(-i h t) of a 2x2 Hermitian h = a0 I + a.sigma, closed form.
inline Eigen::Matrix2cd expm_2x2(cplx h00, cplx h01, cplx h11, double t) {
    const double a0 = 0.5 * (h00.real() + h11.real());
    const double az = 0.5 * (h00.real() - h11.real());
    const double ax = h01.real();
    const double ay = -h01.imag();
    const double r = std::sqrt(ax * ax + ay * ay + az * az);
    const double c = std::cos(r * t);
    // sin(r t) / r, finite as r -> 0
    const double s = r * t == 0.0 ? t : std::sin(r * t) / r;
    const cplx global = std::polar(1.0, -a0 * t);
    Eigen::Matrix2cd u;
    u(0, 0) = global * cplx(c, -s * az);
    u(1, 1) = global * cplx(c, s * az);
    u(0, 1) = global * (-kI * s * cplx(ax, -ay));
    u(1, 0) = global * (-kI * s * cplx(ax, ay));
    return u;
}

}  // namespace detail

/// exp(-i h t) via the eigendecomposition of h.
///
/// Blocks of h that do not couple to each other are exponentiated separately;
/// 1x1 and 2x2 blocks use their closed-form spectra.
inline Operator expm_unitary(const Operator &h, double t) {
    if (!h.is_hermitian()) {
        throw NonHermitianError("expm_unitary requires an operator flagged hermitian");
    }
    if (!std::isfinite(t)) {
        throw Error("expm_unitary: time must be finite");
    }
    const Matrix &m = h.matrix();
    const int n = h.dim();
    Matrix u = Matrix::Zero(n, n);
    for (const auto &blk : detail::coupled_blocks(m)) {
        const int k = static_cast<int>(blk.size());
        if (k == 1) {
            u(blk[0], blk[0]) = std::polar(1.0, -m(blk[0], blk[0]).real() * t);
        } else if (k == 2) {
            const int a = blk[0];
            const int b = blk[1];
            Eigen::Matrix2cd e = detail::expm_2x2(m(a, a), m(a, b), m(b, b), t);
            u(a, a) = e(0, 0);
            u(a, b) = e(0, 1);
            u(b, a) = e(1, 0);
            u(b, b) = e(1, 1);
        } else {
            Matrix sub(k, k);
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < k; ++j) {
                    sub(i, j) = m(blk[i], blk[j]);
                }
            }
            Eigensystem es = eigh(Operator(std::move(sub), OpKind::hermitian));
            const Matrix &v = es.vectors.matrix();
            Vector phases(k);
            for (int q = 0; q < k; ++q) {
                phases(q) = std::polar(1.0, -es.values(q) * t);
            }
            Matrix e = v * phases.asDiagonal() * v.adjoint();
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < k; ++j) {
                    u(blk[i], blk[j]) = e(i, j);
                }
            }
        }
    }
    return Operator(std::move(u), OpKind::unitary);
}

inline Matrix density(const StateVector &s) {
    return s.amplitudes() * s.amplitudes().adjoint();
}

/// Traces out every subsystem not listed in `keep`. The kept subsystems stay
/// in their original relative order.
inline Matrix partial_trace(const Matrix &rho, std::span<const int> dims, std::span<const int> keep) {
    const int n = static_cast<int>(dims.size());
    long total = 1;
    for (int d : dims) {
        total *= d;
    }
    if (rho.rows() != total || rho.cols() != total) {
        throw DimensionError("partial_trace: density matrix does not match dims");
    }
    std::vector<bool> kept(n, false);
    for (int k : keep) {
        if (k < 0 || k >= n) {
            throw DimensionError("partial_trace: keep index out of range");
        }
        if (kept[k]) {
            throw DimensionError("partial_trace: duplicate keep index");
        }
        kept[k] = true;
    }

    // Row-major strides of the full space.
    std::vector<long> stride(n, 1);
    for (int k = n - 2; k >= 0; --k) {
        stride[k] = stride[k + 1] * dims[k + 1];
    }
    long kept_dim = 1;
    for (int k = 0; k < n; ++k) {
        if (kept[k]) {
            kept_dim *= dims[k];
        }
    }

    // Split each full index into (kept index, traced index).
    std::vector<long> kept_of(total);
    std::vector<long> traced_of(total);
    for (long idx = 0; idx < total; ++idx) {
        long ki = 0;
        long ti = 0;
        for (int k = 0; k < n; ++k) {
            long digit = (idx / stride[k]) % dims[k];
            if (kept[k]) {
                ki = ki * dims[k] + digit;
            } else {
                ti = ti * dims[k] + digit;
            }
        }
        kept_of[idx] = ki;
        traced_of[idx] = ti;
    }

    Matrix out = Matrix::Zero(kept_dim, kept_dim);
    for (long i = 0; i < total; ++i) {
        for (long j = 0; j < total; ++j) {
            if (traced_of[i] == traced_of[j]) {
                out(kept_of[i], kept_of[j]) += rho(i, j);
            }
        }
    }
    return out;
}

inline Matrix partial_trace(const StateVector &s, std::span<const int> keep) {
    return partial_trace(density(s), s.dims(), keep);
}

inline Matrix partial_trace(const StateVector &s, std::initializer_list<int> keep) {
    return partial_trace(s, std::span<const int>(keep.begin(), keep.size()));
}

/// Purity tr(rho^2).
inline double purity(const Matrix &rho) {
    return (rho * rho).trace().real();
}

}  // namespace topflux
