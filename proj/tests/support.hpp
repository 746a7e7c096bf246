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

// Shared test helpers: seeded random inputs and brute-force reference
// implementations that do not go through the library code under test.

#pragma once

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "topflux/qmath.hpp"

namespace topflux::testing {

inline Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            m(r, c) = cplx(n(rng), n(rng));
        }
    }
    return m;
}

inline Matrix random_hermitian(int n, std::uint64_t seed) {
    Matrix m = random_matrix(n, n, seed);
    return (m + m.adjoint()) * 0.5;
}

inline Vector random_vector(int n, std::uint64_t seed) {
    Vector v = random_matrix(n, 1, seed).col(0);
    return v / v.norm();
}

/// exp(-i h t) by scaling and squaring of a long Taylor series.
inline Matrix taylor_expm(const Matrix &h, double t) {
    Matrix a = cplx(0.0, -t) * h;
    int squarings = 0;
    while (a.cwiseAbs().maxCoeff() > 0.05) {
        a /= 2.0;
        ++squarings;
    }
    const long n = a.rows();
    Matrix sum = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k < 30; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) {
        sum = sum * sum;
    }
    return sum;
}

/// Reduced density matrix by explicit index sums; `keep` sorted ascending.
inline Matrix brute_partial_trace(const Vector &psi, const std::vector<int> &dims, const std::vector<int> &keep) {
    const int n = static_cast<int>(dims.size());
    long total = 1;
    for (int d : dims) {
        total *= d;
    }
    auto digits = [&](long idx) {
        std::vector<int> out(n);
        for (int k = n - 1; k >= 0; --k) {
            out[k] = static_cast<int>(idx % dims[k]);
            idx /= dims[k];
        }
        return out;
    };
    long kept = 1;
    for (int k : keep) {
        kept *= dims[k];
    }
    Matrix rho = Matrix::Zero(kept, kept);
    for (long i = 0; i < total; ++i) {
        for (long j = 0; j < total; ++j) {
            auto di = digits(i);
            auto dj = digits(j);
            bool traced_equal = true;
            for (int k = 0; k < n; ++k) {
                bool is_kept = std::find(keep.begin(), keep.end(), k) != keep.end();
                if (!is_kept && di[k] != dj[k]) {
                    traced_equal = false;
                }
            }
            if (!traced_equal) {
                continue;
            }
            long r = 0;
            long c = 0;
            for (int k : keep) {
                r = r * dims[k] + di[k];
                c = c * dims[k] + dj[k];
            }
            rho(r, c) += psi(i) * std::conj(psi(j));
        }
    }
    return rho;
}

}  // namespace topflux::testing
