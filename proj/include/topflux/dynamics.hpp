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

// Time-dependent Schroedinger evolution under bias sweeps, together with the
// analytic Landau-Zener formulas used as oracles.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "topflux/fluxmodel.hpp"
#include "topflux/qmath.hpp"

namespace topflux {

class ConvergenceError : public Error {
   public:
    using Error::Error;
};

class DegeneracyError : public Error {
   public:
    using Error::Error;
};

enum class SweepShape {
    linear,  ///< constant velocity
    smooth,  ///< quintic smootherstep: zero velocity and acceleration at both ends
};

inline const char *to_string(SweepShape s) {
    return s == SweepShape::linear ? "linear" : "smooth";
}

/// Bias trajectory eps(t), t in [0, duration].
struct SweepSchedule {
    double eps_initial = 0.0;
    double eps_final = 0.0;
    double duration = 1.0;
    SweepShape shape = SweepShape::linear;

    void validate() const {
        if (!(duration > 0) || !std::isfinite(duration)) {
            throw Error("sweep schedule: duration must be positive");
        }
        if (!std::isfinite(eps_initial) || !std::isfinite(eps_final)) {
            throw Error("sweep schedule: endpoints must be finite");
        }
    }

    /// Sweep rate |eps_f - eps_i| / duration (the mean rate for smooth sweeps).
    double velocity() const {
        return std::abs(eps_final - eps_initial) / duration;
    }

    double progress(double t) const {
        double s = std::clamp(t / duration, 0.0, 1.0);
        if (shape == SweepShape::smooth) {
            return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
        }
        return s;
    }

    double epsilon_at(double t) const {
        return eps_initial + (eps_final - eps_initial) * progress(t);
    }

    bool crosses_zero() const {
        return (eps_initial <= 0 && eps_final >= 0) || (eps_initial >= 0 && eps_final <= 0);
    }
};

using HamiltonianFn = std::function<Operator(double)>;

struct EvolveOptions {
    double tol = 1e-8;
    int initial_steps = 64;
    int max_doublings = 22;  ///< gives up beyond initial_steps * 2^22 steps
    int samples = 256;       ///< trajectory samples kept (plus the endpoints)
};

struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    long steps = 0;            ///< step count of the accepted refinement level
    double last_change = 0.0;  ///< ||psi_N - psi_{N/2}|| at acceptance
    StateVector coarse_final;  ///< final state at N/2 steps

    const StateVector &final_state() const {
        return states.back();
    }

    /// sup_t | ||psi(t)|| - 1 |
    double max_norm_error() const {
        double worst = 0.0;
        for (const auto &s : states) {
            worst = std::max(worst, std::abs(s.norm() - 1.0));
        }
        return worst;
    }
};

namespace detail {

/// Product of `steps` midpoint exponentials applied to `start` (a vector or a
/// matrix of column vectors). Calls `sample(k, state)` after step k when
/// `stride` divides k.
template <typename Sampler>
Matrix midpoint_steps(const HamiltonianFn &h_of_t, Matrix start, double duration, long steps, long stride,
                      Sampler &&sample) {
    const double dt = duration / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) {
        const double mid = (static_cast<double>(k) + 0.5) * dt;
        Operator h = h_of_t(mid);
        if (!h.is_hermitian()) {
            throw NonHermitianError("evolve: Hamiltonian is not flagged hermitian");
        }
        start = expm_unitary(h, dt).matrix() * start;
        if (stride > 0 && (k + 1) % stride == 0) {
            sample(k + 1, start);
        }
    }
    return start;
}

}  // namespace detail

/// Propagates psi0 over [0, duration] with piecewise-constant midpoint
/// Hamiltonians. The step count starts at opts.initial_steps and doubles until
/// the final state moves by less than opts.tol (2-norm).
inline Trajectory evolve(const HamiltonianFn &h_of_t, const StateVector &psi0, double duration,
                         const EvolveOptions &opts = {}) {
    if (!(duration >= 0) || !std::isfinite(duration)) {
        throw Error("evolve: duration must be finite and non-negative");
    }
    if (std::abs(psi0.norm() - 1.0) > 1e-9) {
        throw Error("evolve: initial state is not normalized");
    }
    if (duration == 0.0) {
        return Trajectory{{0.0}, {psi0}, 0, 0.0, psi0};
    }

    auto no_sample = [](long, const Matrix &) {};
    long steps = std::max(1, opts.initial_steps);
    Matrix prev = detail::midpoint_steps(h_of_t, Matrix(psi0.amplitudes()), duration, steps, 0, no_sample);
    for (int level = 0; level < opts.max_doublings; ++level) {
        steps *= 2;
        const long stride = std::max(1L, steps / std::max(1, opts.samples));
        Trajectory traj;
        traj.times.push_back(0.0);
        traj.states.push_back(psi0);
        const double dt = duration / static_cast<double>(steps);
        Matrix fin = detail::midpoint_steps(h_of_t, Matrix(psi0.amplitudes()), duration, steps, stride,
                                            [&](long k, const Matrix &s) {
                                                traj.times.push_back(k == steps ? duration : k * dt);
                                                traj.states.emplace_back(s.col(0), psi0.dims());
                                            });
        if (traj.times.back() != duration) {
            traj.times.push_back(duration);
            traj.states.emplace_back(fin.col(0), psi0.dims());
        }
        double change = (fin - prev).norm();
        if (change < opts.tol) {
            traj.steps = steps;
            traj.last_change = change;
            traj.coarse_final = StateVector(prev.col(0), psi0.dims());
            return traj;
        }
        prev = std::move(fin);
    }
    throw ConvergenceError("evolve: no convergence within " + std::to_string(opts.max_doublings) +
                           " step doublings");
}

struct Propagator {
    Operator unitary;
    long steps = 0;
    double last_change = 0.0;  ///< max-entry change at acceptance
};

/// Time-ordered propagator U(duration, 0) with the same step-doubling control
/// as evolve(), measured on the max-entry change of U.
inline Propagator propagate(const HamiltonianFn &h_of_t, int dim, double duration, const EvolveOptions &opts = {}) {
    if (!(duration >= 0) || !std::isfinite(duration)) {
        throw Error("propagate: duration must be finite and non-negative");
    }
    if (duration == 0.0) {
        return Propagator{Operator::identity(dim), 0, 0.0};
    }
    auto no_sample = [](long, const Matrix &) {};
    const Matrix id = Matrix::Identity(dim, dim);
    long steps = std::max(1, opts.initial_steps);
    Matrix prev = detail::midpoint_steps(h_of_t, id, duration, steps, 0, no_sample);
    for (int level = 0; level < opts.max_doublings; ++level) {
        steps *= 2;
        Matrix fin = detail::midpoint_steps(h_of_t, id, duration, steps, 0, no_sample);
        double change = max_abs(fin - prev);
        if (change < opts.tol) {
            return Propagator{Operator(std::move(fin), OpKind::unitary), steps, change};
        }
        prev = std::move(fin);
    }
    throw ConvergenceError("propagate: no convergence within " + std::to_string(opts.max_doublings) +
                           " step doublings");
}

/// Landau-Zener diabatic passage probability exp(-2 pi delta^2 / (4 v)),
/// delta the gap at the anti-crossing (rad/ns), v the sweep rate (rad/ns^2).
inline double lz_probability(double delta, double v) {
    if (!(v > 0)) {
        throw Error("lz_probability: sweep rate must be positive");
    }
    if (delta == 0.0) {
        return 1.0;
    }
    return std::exp(-2.0 * kPi * delta * delta / (4.0 * v));
}

/// LZ exponent 2 pi delta^2 / (4 v).
inline double lz_exponent(double delta, double v) {
    return 2.0 * kPi * delta * delta / (4.0 * v);
}

/// Sweep time for a sweep from eps to -eps whose LZ exponent
/// 2 pi delta^2 dt / (8 eps) equals `exponent_target`.
inline double min_sweep_time(double delta, double eps_endpoint, double exponent_target) {
    if (!(delta > 0) || !(eps_endpoint > 0) || !(exponent_target > 0)) {
        throw Error("min_sweep_time: arguments must be positive");
    }
    return 8.0 * eps_endpoint * exponent_target / (2.0 * kPi * delta * delta);
}

inline constexpr double kDegeneracyGap = 1e-12;

/// |<e_final|psi_final>|^2 for a two-level trajectory started in the ground
/// state of h_initial.
inline double diabatic_transition_probability(const Trajectory &traj, const Operator &h_initial,
                                              const Operator &h_final) {
    if (h_initial.dim() != 2 || h_final.dim() != 2 || traj.states.empty() || traj.final_state().dim() != 2) {
        throw DimensionError("diabatic_transition_probability expects two-level data");
    }
    Eigensystem fin = eigh(h_final);
    if (fin.values(1) - fin.values(0) < kDegeneracyGap) {
        throw DegeneracyError("final Hamiltonian is degenerate; adiabatic labels are undefined");
    }
    Eigensystem ini = eigh(h_initial);
    if (ini.values(1) - ini.values(0) < kDegeneracyGap) {
        throw DegeneracyError("initial Hamiltonian is degenerate; adiabatic labels are undefined");
    }
    cplx amp = fin.vectors.matrix().col(1).dot(traj.final_state().amplitudes());
    return std::clamp(std::norm(amp), 0.0, 1.0);
}

struct SweepResult {
    double probability = 0.0;
    double coarse_probability = 0.0;  ///< same quantity from the half-step solution
    Trajectory trajectory;
};

/// Two-level sweep of flux_hamiltonian(eps(t), delta) started in the ground
/// state at eps_initial; reports the diabatic transition probability.
inline SweepResult simulate_sweep(double delta, const SweepSchedule &sched, const EvolveOptions &opts = {}) {
    sched.validate();
    auto h = [&](double t) { return flux_hamiltonian(sched.epsilon_at(t), delta); };
    const Operator h0 = h(0.0);
    const Operator h1 = h(sched.duration);
    const Eigensystem start = eigh(h0);
    StateVector psi0(start.vectors.matrix().col(0), {2});
    SweepResult out;
    out.trajectory = evolve(h, psi0, sched.duration, opts);
    out.probability = diabatic_transition_probability(out.trajectory, h0, h1);
    Trajectory coarse;
    coarse.times = {sched.duration};
    coarse.states = {out.trajectory.coarse_final};
    out.coarse_probability = diabatic_transition_probability(coarse, h0, h1);
    return out;
}

}  // namespace topflux
