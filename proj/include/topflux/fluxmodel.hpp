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

// Effective Hamiltonians of the flux-qubit / topological-qubit hybrid.
//
// Energies are angular frequencies in rad/ns (hbar = 1). A figure quoted as
// "X x 2pi GHz" is X * 2pi rad/ns; see ghz().

#pragma once

#include <array>
#include <cmath>

#include "topflux/qmath.hpp"

namespace topflux {

/// Cyclic GHz to rad/ns.
inline constexpr double ghz(double cyclic) {
    return 2.0 * kPi * cyclic;
}

/// Effective two-level flux-qubit parameters.
struct FluxParams {
    double delta_max = ghz(1.0);                 ///< maximal tunnel splitting, rad/ns
    double persistent_current_scale = ghz(100);  ///< 2 I_p phi_0 in rad/ns
    double bias_phi = 0.5;                       ///< phi / phi_0
    double q_ext = 0.5;                          ///< external island charge, units of e

    /// Parameters whose bias yields the requested epsilon with the default current scale.
    static FluxParams at_epsilon(double delta_max, double epsilon, double q_ext) {
        FluxParams p;
        p.delta_max = delta_max;
        p.bias_phi = 0.5 + epsilon / p.persistent_current_scale;
        p.q_ext = q_ext;
        return p;
    }
};

/// epsilon = 2 I_p (phi - phi_0 / 2).
inline double epsilon_of_bias(const FluxParams &p) {
    return p.persistent_current_scale * (p.bias_phi - 0.5);
}

/// |cos(pi x / 2)| evaluated so that odd integers give exactly 0 and
/// x, 2 - x, -x give bit-identical results.
inline double abs_cos_half_pi(double x) {
    double r = std::fmod(std::abs(x), 2.0);
    if (r > 1.0) {
        r = 2.0 - r;
    }
    if (r == 1.0) {
        return 0.0;
    }
    return r <= 0.5 ? std::cos(kPi * r / 2.0) : std::sin(kPi * (1.0 - r) / 2.0);
}

/// Aharonov-Casher modulated splitting Delta_max |cos(pi (n_p + q_ext) / 2)|,
/// q_ext in units of e.
inline double ac_splitting(double delta_max, int n_p, double q_ext) {
    return delta_max * abs_cos_half_pi(static_cast<double>(n_p) + q_ext);
}

/// H = -(eps sigma_z + delta sigma_x) / 2 in the diabatic basis (|L>, |R>).
inline Operator flux_hamiltonian(double eps, double delta) {
    Matrix h(2, 2);
    h << -0.5 * eps, -0.5 * delta, -0.5 * delta, 0.5 * eps;
    return Operator(h, OpKind::hermitian);
}

/// Energy eigenbasis of flux_hamiltonian; column 0 is |g>, column 1 is |e>.
inline Eigensystem flux_energy_basis(double eps, double delta) {
    return eigh(flux_hamiltonian(eps, delta));
}

/// Topological (x) flux Hamiltonian, block diagonal in the island parity.
inline Operator conditional_hamiltonian(double eps, double delta_max, double q_ext) {
    const std::array<Operator, 2> blocks{
        flux_hamiltonian(eps, ac_splitting(delta_max, 0, q_ext)),
        flux_hamiltonian(eps, ac_splitting(delta_max, 1, q_ext)),
    };
    return controlled_blocks(blocks);
}

inline Operator conditional_hamiltonian(const FluxParams &p) {
    return conditional_hamiltonian(epsilon_of_bias(p), p.delta_max, p.q_ext);
}

/// Ground energy -sqrt(eps^2 + delta^2) / 2.
inline double ground_energy(double eps, double delta) {
    return -0.5 * std::hypot(eps, delta);
}

/// Ground-energy difference between the odd and even island parity at
/// q_ext = 0: (sqrt(eps^2 + delta_max^2) - eps) / 2, eps >= 0.
///
/// Written as delta_max^2 / (2 (sqrt(eps^2 + delta_max^2) + eps)) to avoid
/// cancellation at large eps.
inline double phase_rate(double eps, double delta_max) {
    if (eps < 0) {
        throw Error("phase_rate: epsilon must be non-negative (use the bias magnitude)");
    }
    double root = std::hypot(eps, delta_max);
    if (root == 0.0) {
        return 0.0;
    }
    return 0.5 * delta_max * delta_max / (root + eps);
}

/// Exchange coupling g (sigma_x sigma_x + sigma_y sigma_y) on flux1 (x) flux2
/// in the rotating frame and energy basis (|g>, |e>) of each qubit.
///
/// `omega_cyclic` is the |ge> <-> |eg> population oscillation frequency in
/// GHz. With g = pi Omega / 2 the populations follow sin^2(pi Omega t), a full
/// swap takes 1 / (2 Omega), and the swapped amplitude picks up -i.
inline Operator coupler_hamiltonian(double omega_cyclic) {
    if (!(omega_cyclic > 0)) {
        throw Error("coupler_hamiltonian: oscillation frequency must be positive");
    }
    const double g = kPi * omega_cyclic / 2.0;
    Matrix xx = kron(pauli_x().matrix(), pauli_x().matrix());
    Matrix yy = kron(pauli_y().matrix(), pauli_y().matrix());
    return Operator(g * (xx + yy), OpKind::hermitian);
}

/// Duration of a full |ge> -> |eg> swap, 1 / (2 Omega) ns.
inline double swap_duration(double omega_cyclic) {
    return 1.0 / (2.0 * omega_cyclic);
}

/// Qubit 1 (read-out, charge sensitive), qubit 2 (receiver) and the driven coupler.
struct TopFluxFluxParams {
    FluxParams qubit1;
    double delta2 = ghz(0.7);    ///< qubit-2 splitting at its optimal point, rad/ns
    double omega_cyclic = 0.025;  ///< coupler oscillation frequency, GHz

    /// Resonant drive frequency |Delta_1 - Delta_2| in rad/ns, Delta_1 being
    /// the even-parity splitting of qubit 1 at q_ext = 0.
    double drive_frequency() const {
        return std::abs(qubit1.delta_max - delta2);
    }

    void validate() const {
        if (!(drive_frequency() > 0)) {
            throw Error("top-flux-flux: Delta_2 must differ from Delta_1 for a resonant drive");
        }
        if (!(omega_cyclic > 0)) {
            throw Error("top-flux-flux: coupler frequency must be positive");
        }
        if (!(delta2 > 0)) {
            throw Error("top-flux-flux: Delta_2 must be positive");
        }
    }
};

}  // namespace topflux
