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

// End-to-end protocols of the hybrid system:
//   * flux-assisted phase gate on the topological qubit,
//   * write: flux qubit -> topological qubit via a Landau-Zener CNOT,
//   * read: topological qubit -> flux qubit 2 through the top-flux-flux chain,
// plus an ideal-gate backend that runs the same circuits with exact matrices.
//
// Measurements are ideal projective measurements driven by a per-run RNG.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "topflux/analysis.hpp"
#include "topflux/dynamics.hpp"
#include "topflux/fluxmodel.hpp"
#include "topflux/majorana.hpp"
#include "topflux/qmath.hpp"

namespace topflux {

class FactorizationError : public Error {
   public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Measurement

struct MeasurementModel {
    enum class Mode { sampled, both_branches };
    std::uint64_t seed = 0;
    Mode mode = Mode::sampled;
};

/// Per-run random stream seeded from (seed, run index). mt19937_64 and
/// seed_seq are fully specified by the standard, and uniform() avoids the
/// implementation-defined distributions, so streams match across platforms.
class RunRng {
   public:
    RunRng(std::uint64_t seed, std::uint64_t run) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)};
        engine_.seed(seq);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

   private:
    std::mt19937_64 engine_;
};

/// Orthonormal measurement basis of one subsystem, one column per outcome.
struct MeasurementBasis {
    std::string name;
    Operator columns;
    std::vector<std::string> labels;

    static MeasurementBasis logical() {
        return {"logical", Operator::identity(2), {"0", "1"}};
    }

    /// Energy eigenbasis (|g>, |e>) of the flux qubit at (eps, delta), in the diabatic basis.
    static MeasurementBasis energy(double eps, double delta) {
        return {"energy", flux_energy_basis(eps, delta).vectors, {"g", "e"}};
    }

    /// Energy basis for a qubit already stored in its energy basis.
    static MeasurementBasis stored_energy() {
        return {"energy", Operator::identity(2), {"g", "e"}};
    }
};

/// <b|_site psi: the (unnormalized) state of the remaining subsystems.
inline StateVector contract(const StateVector &psi, int site, const Vector &b) {
    const auto &dims = psi.dims();
    const int n = static_cast<int>(dims.size());
    if (site < 0 || site >= n || dims[site] != b.size()) {
        throw DimensionError("contract: site out of range or dimension mismatch");
    }
    if (n == 1) {
        throw DimensionError("contract: cannot contract the only subsystem");
    }
    long inner = 1;
    for (int k = site + 1; k < n; ++k) {
        inner *= dims[k];
    }
    const long outer = psi.dim() / (inner * dims[site]);
    Vector out = Vector::Zero(outer * inner);
    for (long o = 0; o < outer; ++o) {
        for (long d = 0; d < dims[site]; ++d) {
            for (long i = 0; i < inner; ++i) {
                out(o * inner + i) += std::conj(b(d)) * psi[(o * dims[site] + d) * inner + i];
            }
        }
    }
    std::vector<int> rest = dims;
    rest.erase(rest.begin() + site);
    return StateVector(std::move(out), std::move(rest));
}

struct MeasurementBranch {
    int outcome = 0;
    std::string label;
    double probability = 0.0;
    StateVector state;  ///< collapsed and renormalized; zero-probability branches keep the raw projection
};

inline constexpr double kMinSampledProbability = 1e-14;

struct MeasurementResult {
    std::vector<MeasurementBranch> branches;
    int outcome = -1;  ///< sampled outcome, -1 in both-branches mode

    const MeasurementBranch &sampled() const {
        return branches.at(static_cast<size_t>(outcome));
    }
};

/// All Born-rule branches of a projective measurement of `site`.
inline std::vector<MeasurementBranch> measurement_branches(const StateVector &psi, int site,
                                                           const MeasurementBasis &basis) {
    if (std::abs(psi.norm() - 1.0) > 1e-9) {
        throw Error("measure: state is not normalized");
    }
    std::vector<MeasurementBranch> out;
    const Matrix &cols = basis.columns.matrix();
    for (int k = 0; k < cols.cols(); ++k) {
        Matrix proj = cols.col(k) * cols.col(k).adjoint();
        StateVector collapsed = embed(Operator(proj), site, psi.dims()) * psi;
        double p = std::clamp(collapsed.amplitudes().squaredNorm(), 0.0, 1.0);
        MeasurementBranch br;
        br.outcome = k;
        br.label = k < static_cast<int>(basis.labels.size()) ? basis.labels[k] : std::to_string(k);
        br.probability = p;
        br.state = p > 0 ? collapsed.normalized() : collapsed;
        out.push_back(std::move(br));
    }
    return out;
}

/// Draws an outcome; branches below 1e-14 are never selected.
inline int sample_outcome(const std::vector<MeasurementBranch> &branches, RunRng &rng) {
    double total = 0.0;
    for (const auto &b : branches) {
        if (b.probability >= kMinSampledProbability) {
            total += b.probability;
        }
    }
    double u = rng.uniform() * total;
    int last = -1;
    for (const auto &b : branches) {
        if (b.probability < kMinSampledProbability) {
            continue;
        }
        last = b.outcome;
        if (u < b.probability) {
            return b.outcome;
        }
        u -= b.probability;
    }
    return last;
}

inline MeasurementResult measure(const StateVector &psi, int site, const MeasurementBasis &basis,
                                 const MeasurementModel &model, std::uint64_t run_index = 0) {
    MeasurementResult r;
    r.branches = measurement_branches(psi, site, basis);
    if (model.mode == MeasurementModel::Mode::sampled) {
        RunRng rng(model.seed, run_index);
        r.outcome = sample_outcome(r.branches, rng);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Records

struct ProtocolEvent {
    double time = 0.0;      ///< start, ns
    double duration = 0.0;  ///< ns
    std::string kind;
    std::string detail;
};

struct BranchRecord {
    int outcome = 0;
    std::string label;
    double probability = 0.0;
    double fidelity_raw = 0.0;
    double fidelity_corrected = 0.0;
    std::vector<double> correction_angles;
    StateVector delivered;
};

struct ProtocolRecord {
    std::string protocol;
    std::vector<ProtocolEvent> events;
    std::vector<int> outcomes;  ///< sampled outcomes (empty in both-branches mode)
    StateVector final_state;    ///< delivered state of the sampled branch, or of the likeliest branch
    StateVector target_state;
    double fidelity_raw = 0.0;
    double fidelity_corrected = 0.0;
    std::vector<double> phases;  ///< virtual-Z calibration angles of the reported branch(es)
    double leakage = 0.0;
    std::vector<BranchRecord> branches;
    std::map<std::string, double> metrics;
    std::vector<std::string> notes;

    void add_event(double time, double duration, std::string kind, std::string detail = {}) {
        events.push_back({time, duration, std::move(kind), std::move(detail)});
    }

    /// Throws when a record invariant is violated.
    void check() const {
        auto in_unit = [](double f) { return f >= 0.0 && f <= 1.0; };
        if (!in_unit(fidelity_raw) || !in_unit(fidelity_corrected) || fidelity_corrected < fidelity_raw - 1e-12) {
            throw Error("protocol record: fidelity invariant violated");
        }
    }
};

namespace detail {

inline StateVector normalized_amplitudes(cplx a, cplx b) {
    const double n = std::norm(a) + std::norm(b);
    if (std::abs(n - 1.0) > 1e-9) {
        throw Error("amplitudes must satisfy |a|^2 + |b|^2 = 1");
    }
    return StateVector(Eigen::Vector2cd(a, b), {2});
}

/// Fills branch fidelities and folds them into the record according to the model.
inline void finish_branches(ProtocolRecord &rec, std::vector<BranchRecord> branches, const StateVector &target,
                            int z_site, const MeasurementModel &model, int sampled) {
    for (auto &b : branches) {
        if (b.probability <= 0) {
            continue;
        }
        b.fidelity_raw = fidelity(b.delivered, target);
        LocalZFit fit = fidelity_up_to_local_z(b.delivered, target, {z_site});
        b.fidelity_corrected = std::max(fit.fidelity, b.fidelity_raw);
        b.correction_angles = fit.angles;
    }
    rec.target_state = target;
    if (model.mode == MeasurementModel::Mode::sampled) {
        const BranchRecord &b = branches.at(static_cast<size_t>(sampled));
        rec.outcomes.push_back(sampled);
        rec.final_state = b.delivered;
        rec.fidelity_raw = b.fidelity_raw;
        rec.fidelity_corrected = b.fidelity_corrected;
        rec.phases = b.correction_angles;
    } else {
        size_t likeliest = 0;
        for (size_t k = 0; k < branches.size(); ++k) {
            rec.fidelity_raw += branches[k].probability * branches[k].fidelity_raw;
            rec.fidelity_corrected += branches[k].probability * branches[k].fidelity_corrected;
            rec.phases.insert(rec.phases.end(), branches[k].correction_angles.begin(),
                              branches[k].correction_angles.end());
            if (branches[k].probability > branches[likeliest].probability) {
                likeliest = k;
            }
        }
        rec.fidelity_raw = std::clamp(rec.fidelity_raw, 0.0, 1.0);
        rec.fidelity_corrected = std::clamp(std::max(rec.fidelity_corrected, rec.fidelity_raw), 0.0, 1.0);
        rec.final_state = branches[likeliest].delivered;
    }
    rec.branches = std::move(branches);
    rec.check();
}

/// q_ext(t) moving smoothly (quintic smootherstep) from `from` to `to`.
inline double ramp_charge(double from, double to, double t, double duration) {
    SweepSchedule s{from, to, duration, SweepShape::smooth};
    return s.epsilon_at(t);
}

/// Propagator of a q_ext ramp at fixed bias on topological (x) flux.
/// A zero duration is a sudden switch (identity propagator).
inline Propagator charge_ramp(double eps, double delta_max, double from, double to, double duration,
                              const EvolveOptions &opts) {
    if (duration <= 0) {
        return Propagator{Operator::identity(4), 0, 0.0};
    }
    auto h = [=](double t) { return conditional_hamiltonian(eps, delta_max, ramp_charge(from, to, t, duration)); };
    return propagate(h, 4, duration, opts);
}

inline Propagator sweep_propagator(const SweepSchedule &s, double delta_max, double q_ext, const EvolveOptions &opts) {
    auto h = [=](double t) { return conditional_hamiltonian(s.epsilon_at(t), delta_max, q_ext); };
    return propagate(h, 4, s.duration, opts);
}

/// Computational basis ket |k> of a qubit.
inline Vector ket(int k) {
    Vector v = Vector::Zero(2);
    v(k) = 1.0;
    return v;
}

inline std::string amplitude_text(cplx a, cplx b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "a=%.6g%+.6gi b=%.6g%+.6gi", a.real(), a.imag(), b.real(), b.imag());
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Phase gate

/// Relative phase of |0> with respect to |1> picked up by the topological
/// qubit while idling for `duration` next to a flux qubit in its ground state,
/// read from the flux-ground-conditioned amplitudes.
inline double idle_relative_phase(const FluxParams &p, double duration) {
    const double eps = epsilon_of_bias(p);
    const Operator h = conditional_hamiltonian(p);
    const Operator u = expm_unitary(h, duration);
    cplx g[2];
    for (int np = 0; np < 2; ++np) {
        const double delta = ac_splitting(p.delta_max, np, p.q_ext);
        const Vector ground = flux_energy_basis(eps, delta).vectors.matrix().col(0);
        Matrix blk = u.matrix().block(2 * np, 2 * np, 2, 2);
        g[np] = ground.dot(blk * ground);
    }
    return std::arg(g[0] * std::conj(g[1]));
}

/// Runs the flux-assisted phase gate. The flux qubit starts in the ground
/// state at q_ext = 1/2 and bias |eps|; q_ext is stepped suddenly to 0, held
/// for theta_target / phase_rate, and stepped back.
///
/// The even-parity branch (logical |0>) has the lower ground energy, so the
/// gate applied is diag(e^{i theta}, 1), i.e. diag(1, e^{-i theta}) up to a
/// global phase. metrics["phase"] is the phase of |0> relative to |1>,
/// extracted from the flux-ground-conditioned amplitudes.
inline ProtocolRecord phase_gate_protocol(const FluxParams &p, double theta_target,
                                          LogicalState topo = {cplx(1 / std::sqrt(2.0)), cplx(1 / std::sqrt(2.0))}) {
    const double eps = std::abs(epsilon_of_bias(p));
    if (!(eps > 0)) {
        throw Error("phase gate: the flux qubit must be biased away from the optimal point");
    }
    if (!(theta_target >= 0) || !std::isfinite(theta_target)) {
        throw Error("phase gate: target phase must be finite and non-negative");
    }
    const StateVector topo_state = detail::normalized_amplitudes(topo.c1, topo.c2);

    ProtocolRecord rec;
    rec.protocol = "phase-gate";
    const double rate = phase_rate(eps, p.delta_max);
    const double hold = theta_target / rate;

    const double delta_off = ac_splitting(p.delta_max, 0, 0.5);
    const Vector ground_off = flux_energy_basis(eps, delta_off).vectors.matrix().col(0);

    rec.add_event(0.0, 0.0, "prepare", "flux ground state at q_ext=1/2");
    rec.add_event(0.0, 0.0, "coupling_on", "sudden q_ext 1/2 -> 0");
    rec.add_event(0.0, hold, "hold", "q_ext=0");
    rec.add_event(hold, 0.0, "coupling_off", "sudden q_ext 0 -> 1/2");

    const Operator h = conditional_hamiltonian(eps, p.delta_max, 0.0);
    const Operator u = expm_unitary(h, hold);

    // Flux-ground-conditioned gate amplitudes and the sudden-switch mismatch per parity.
    cplx gate[2];
    double mismatch[2];
    for (int np = 0; np < 2; ++np) {
        const double delta_on = ac_splitting(p.delta_max, np, 0.0);
        const Vector ground_on = flux_energy_basis(eps, delta_on).vectors.matrix().col(0);
        mismatch[np] = 1.0 - std::norm(ground_on.dot(ground_off));
        Matrix blk = u.matrix().block(2 * np, 2 * np, 2, 2);
        gate[np] = ground_off.dot(blk * ground_off);
    }
    const double w0 = std::norm(topo.c1);
    const double w1 = std::norm(topo.c2);
    rec.leakage = w0 * mismatch[0] + w1 * mismatch[1];

    const StateVector full = u * kron(topo_state, StateVector(ground_off, {2}));
    const StateVector conditioned = contract(full, 1, ground_off);
    const double p_ground = conditioned.amplitudes().squaredNorm();

    const double phase = std::arg(gate[0] * std::conj(gate[1]));
    const StateVector target(Eigen::Vector2cd(topo.c1 * std::polar(1.0, theta_target), topo.c2), {2});

    BranchRecord br;
    br.outcome = 0;
    br.label = "g";
    br.probability = p_ground;
    br.delivered = conditioned.normalized();
    detail::finish_branches(rec, {br}, target, 0, MeasurementModel{0, MeasurementModel::Mode::both_branches}, 0);
    rec.fidelity_raw = rec.branches[0].fidelity_raw;
    rec.fidelity_corrected = rec.branches[0].fidelity_corrected;

    Matrix applied(2, 2);
    applied << gate[0], 0, 0, gate[1];
    rec.metrics["epsilon"] = eps;
    rec.metrics["phase_rate"] = rate;
    rec.metrics["hold_ns"] = hold;
    rec.metrics["theta_target"] = theta_target;
    rec.metrics["phase"] = phase;
    rec.metrics["phase_error"] = std::abs(detail::wrap_angle(phase - theta_target));
    rec.metrics["leakage_even"] = mismatch[0];
    rec.metrics["leakage_odd"] = mismatch[1];
    rec.metrics["residual_excitation"] = 1.0 - p_ground;
    rec.metrics["gate_00_re"] = applied(0, 0).real();
    rec.metrics["gate_00_im"] = applied(0, 0).imag();
    rec.metrics["gate_11_re"] = applied(1, 1).real();
    rec.metrics["gate_11_im"] = applied(1, 1).imag();
    rec.check();
    return rec;
}

// ---------------------------------------------------------------------------
// Write: flux qubit -> topological qubit

struct WriteOptions {
    /// Duration of each smooth q_ext ramp (ns). Zero switches suddenly.
    double ramp_ns = 3.0;
    EvolveOptions solver{};
};

/// Write protocol with its deterministic dynamics evaluated once; run() only
/// prepares, propagates and measures.
class WriteProtocol {
   public:
    WriteProtocol(double delta_max, SweepSchedule sweep, WriteOptions opts = {})
        : delta_max_(delta_max), sweep_(sweep), opts_(opts) {
        sweep_.validate();
        if (!(delta_max_ > 0)) {
            throw Error("write: Delta_max must be positive");
        }
        if (!(std::abs(sweep_.eps_initial) > delta_max_)) {
            throw Error("write: the initial bias must exceed Delta_max");
        }
        if (!sweep_.crosses_zero() || sweep_.eps_final == sweep_.eps_initial) {
            throw Error("write: the sweep must cross the anti-crossing");
        }
        on_ = detail::charge_ramp(sweep_.eps_initial, delta_max_, 0.5, 0.0, opts_.ramp_ns, opts_.solver);
        lz_ = detail::sweep_propagator(sweep_, delta_max_, 0.0, opts_.solver);
        off_ = detail::charge_ramp(sweep_.eps_final, delta_max_, 0.0, 0.5, opts_.ramp_ns, opts_.solver);
        total_ = off_.unitary * lz_.unitary * on_.unitary;

        const double delta_off = ac_splitting(delta_max_, 0, 0.5);
        prep_basis_ = flux_energy_basis(sweep_.eps_initial, delta_off).vectors;
        meas_basis_ = MeasurementBasis::energy(sweep_.eps_final, delta_off);
        hadamard_word_ = compile_clifford(hadamard());
        not_word_ = compile_clifford(pauli_x());
    }

    const Operator &propagator() const {
        return total_;
    }
    const SweepSchedule &sweep() const {
        return sweep_;
    }
    double delta_max() const {
        return delta_max_;
    }

    /// Diabatic (label-flipping) probability of the LZ sweep in parity sector
    /// n_p, between the coupled eigenbases at the sweep endpoints.
    double sweep_transition(int np) const {
        const double delta = ac_splitting(delta_max_, np, 0.0);
        const Vector gi = flux_energy_basis(sweep_.eps_initial, delta).vectors.matrix().col(0);
        const Vector ef = flux_energy_basis(sweep_.eps_final, delta).vectors.matrix().col(1);
        Matrix blk = lz_.unitary.matrix().block(2 * np, 2 * np, 2, 2);
        return std::norm(ef.dot(blk * gi));
    }

    /// Topological |0> (x) (a|g> + b|e>) before the Hadamard.
    StateVector initial_state(cplx a, cplx b) const {
        const StateVector flux(prep_basis_.matrix() * detail::normalized_amplitudes(a, b).amplitudes(), {2});
        return kron(StateVector::basis({2}, 0), flux);
    }

    /// State just before the flux measurement.
    StateVector pre_measurement_state(cplx a, cplx b) const {
        const Operator h_topo = kron(braid_logical(hadamard_word_), Operator::identity(2));
        return total_ * (h_topo * initial_state(a, b));
    }

    ProtocolRecord run(cplx a, cplx b, const MeasurementModel &model, std::uint64_t run_index = 0) const {
        ProtocolRecord rec;
        rec.protocol = "write";
        const StateVector target = detail::normalized_amplitudes(a, b);
        double t = 0.0;
        rec.add_event(t, 0.0, "prepare", "topological |0>, flux " + detail::amplitude_text(a, b));
        rec.add_event(t, 0.0, "braid", "Hadamard " + to_string(hadamard_word_));
        rec.add_event(t, opts_.ramp_ns, "coupling_on", opts_.ramp_ns > 0 ? "smooth q_ext 1/2 -> 0" : "sudden");
        t += opts_.ramp_ns;
        rec.add_event(t, sweep_.duration, "sweep", std::string("LZ sweep, ") + to_string(sweep_.shape));
        t += sweep_.duration;
        rec.add_event(t, opts_.ramp_ns, "coupling_off", opts_.ramp_ns > 0 ? "smooth q_ext 0 -> 1/2" : "sudden");
        t += opts_.ramp_ns;

        const StateVector psi = pre_measurement_state(a, b);
        const MeasurementResult m = measure(psi, 1, meas_basis_, model, run_index);
        rec.add_event(t, 0.0, "measure", "flux qubit, energy basis");

        const Operator x_topo = braid_logical(not_word_);
        std::vector<BranchRecord> branches;
        for (const auto &mb : m.branches) {
            BranchRecord br;
            br.outcome = mb.outcome;
            br.label = mb.label;
            br.probability = mb.probability;
            if (mb.probability > 0) {
                StateVector topo = contract(mb.state, 1, meas_basis_.columns.matrix().col(mb.outcome)).normalized();
                br.delivered = mb.outcome == 1 ? x_topo * topo : topo;
            } else {
                br.delivered = target;
            }
            branches.push_back(std::move(br));
        }
        const bool corrected = model.mode == MeasurementModel::Mode::both_branches || m.outcome == 1;
        if (corrected) {
            rec.add_event(t, 0.0, "correction", "braid NOT " + to_string(not_word_) + " on outcome e");
        }
        detail::finish_branches(rec, std::move(branches), target, 0, model, m.outcome);

        rec.leakage = 0.0;
        rec.metrics["sweep_ns"] = sweep_.duration;
        rec.metrics["ramp_ns"] = opts_.ramp_ns;
        rec.metrics["total_ns"] = t;
        rec.metrics["velocity"] = sweep_.velocity();
        rec.metrics["lz_analytic"] = lz_probability(delta_max_, sweep_.velocity());
        rec.metrics["sweep_transition_even"] = sweep_transition(0);
        rec.metrics["sweep_transition_odd"] = sweep_transition(1);
        rec.metrics["solver_steps"] = static_cast<double>(on_.steps + lz_.steps + off_.steps);
        return rec;
    }

    /// Flux outcomes of `runs` sampled write runs (run indices 0..runs-1).
    /// The dynamics are shared; each run draws from its own RunRng, so the
    /// result does not depend on `threads`.
    std::vector<int> sample_outcomes(cplx a, cplx b, std::uint64_t seed, std::size_t runs,
                                     unsigned threads = 0) const {
        const auto branches = measurement_branches(pre_measurement_state(a, b), 1, meas_basis_);
        std::vector<int> out(runs, -1);
        if (threads == 0) {
            threads = std::max(1u, std::thread::hardware_concurrency());
        }
        threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(runs, 1)));
        auto work = [&](unsigned w) {
            for (std::size_t k = w; k < runs; k += threads) {
                RunRng rng(seed, k);
                out[k] = sample_outcome(branches, rng);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned w = 1; w < threads; ++w) {
            pool.emplace_back(work, w);
        }
        work(0);
        for (auto &t : pool) {
            t.join();
        }
        return out;
    }

   private:
    double delta_max_;
    SweepSchedule sweep_;
    WriteOptions opts_;
    Propagator on_;
    Propagator lz_;
    Propagator off_;
    Operator total_;
    Operator prep_basis_;
    MeasurementBasis meas_basis_;
    BraidWord hadamard_word_;
    BraidWord not_word_;
};

/// Single write run; FluxParams supplies Delta_max and the preparation bias,
/// which must equal the sweep's starting point.
inline ProtocolRecord write_protocol(cplx a, cplx b, const FluxParams &p, const SweepSchedule &sched,
                                     const MeasurementModel &model, const WriteOptions &opts = {}) {
    const double eps = epsilon_of_bias(p);
    if (std::abs(eps - sched.eps_initial) > 1e-9 * std::max(1.0, std::abs(eps))) {
        throw Error("write: flux bias does not match the start of the sweep");
    }
    return WriteProtocol(p.delta_max, sched, opts).run(a, b, model);
}

// ---------------------------------------------------------------------------
// Read: topological qubit -> flux qubit 2

inline constexpr double kQubit2CoherenceNs = 2000.0;

struct ReadOptions {
    double ramp_ns = 3.0;                   ///< smooth q_ext ramps at points A and B; zero is sudden
    double min_qubit1_purity = 1.0 - 1e-6;  ///< factorization check at point B
    EvolveOptions solver{};
};

/// Read protocol on topological (x) qubit 1 (diabatic basis) (x) qubit 2
/// (energy basis, interaction picture of its own Hamiltonian).
///
/// Stages: coupling on at A, sweep A -> anti-crossing, resonant exchange pulse
/// of 1/(2 Omega) acting on the even-parity branch only, sweep -> B, coupling
/// off at B, factorization check, braid Hadamard, topological measurement,
/// and a conditional phase flip of qubit 2 on outcome 1.
class ReadProtocol {
   public:
    ReadProtocol(TopFluxFluxParams params, SweepSchedule sweep_in, SweepSchedule sweep_out, ReadOptions opts = {})
        : p_(params), in_(sweep_in), out_(sweep_out), opts_(opts) {
        p_.validate();
        in_.validate();
        out_.validate();
        const double d1 = p_.qubit1.delta_max;
        if (!(in_.eps_initial < 0) || std::abs(in_.eps_initial) < 10.0 * d1 * (1 - 1e-12)) {
            throw Error("read: point A must satisfy eps_A < 0 and |eps_A| >= 10 Delta_1");
        }
        if (in_.eps_final != out_.eps_initial) {
            throw Error("read: the two sweeps must meet at the pulse bias");
        }
        if (!in_.crosses_zero() || !(out_.eps_final > 0)) {
            throw Error("read: the sweeps must go from point A through the anti-crossing to point B");
        }
        pulse_ns_ = swap_duration(p_.omega_cyclic);

        const Operator id2 = Operator::identity(2);
        on_ = detail::charge_ramp(in_.eps_initial, d1, 0.5, 0.0, opts_.ramp_ns, opts_.solver);
        sweep_in_ = detail::sweep_propagator(in_, d1, 0.0, opts_.solver);
        sweep_out_ = detail::sweep_propagator(out_, d1, 0.0, opts_.solver);
        off_ = detail::charge_ramp(out_.eps_final, d1, 0.0, 0.5, opts_.ramp_ns, opts_.solver);
        u_to_pulse_ = kron(sweep_in_.unitary * on_.unitary, id2);
        u_pulse_ = pulse_unitary();
        u_after_pulse_ = kron(off_.unitary * sweep_out_.unitary, id2);

        hadamard_word_ = compile_clifford(hadamard());
    }

    double pulse_duration() const {
        return pulse_ns_;
    }

    /// Sweep A -> anti-crossing, exchange pulse, sweep -> B.
    double entangling_duration() const {
        return in_.duration + pulse_ns_ + out_.duration;
    }

    /// Topological a|0> + b|1>, qubit 1 in its q_ext = 1/2 ground state at A,
    /// qubit 2 in |e>.
    StateVector initial_state(cplx a, cplx b) const {
        const double d_off = ac_splitting(p_.qubit1.delta_max, 0, 0.5);
        const StateVector q1(flux_energy_basis(in_.eps_initial, d_off).vectors.matrix().col(0), {2});
        return kron(kron(detail::normalized_amplitudes(a, b), q1), StateVector::basis({2}, 1));
    }

    StateVector post_pulse_state(cplx a, cplx b) const {
        return u_pulse_ * (u_to_pulse_ * initial_state(a, b));
    }

    StateVector point_b_state(cplx a, cplx b) const {
        return u_after_pulse_ * post_pulse_state(a, b);
    }

    /// a|0>|e_1>|g> + b|1>|D_A>|e>: e_1 the excited state of qubit 1 at the
    /// pulse bias, D_A the diabatic state that is the ground state at A.
    StateVector ideal_post_pulse_state(cplx a, cplx b) const {
        const double d1 = p_.qubit1.delta_max;
        const Vector e1 = flux_energy_basis(in_.eps_final, d1).vectors.matrix().col(1);
        const Vector da = flux_energy_basis(in_.eps_initial, 0.0).vectors.matrix().col(0);
        const StateVector even = kron(kron(StateVector(detail::ket(0), {2}), StateVector(e1, {2})),
                                      StateVector(detail::ket(0), {2}));
        const StateVector odd = kron(kron(StateVector(detail::ket(1), {2}), StateVector(da, {2})),
                                     StateVector(detail::ket(1), {2}));
        return StateVector(a * even.amplitudes() + b * odd.amplitudes(), {2, 2, 2});
    }

    /// Largest excitation probability the exchange pulse could drive in the
    /// odd-parity branch, where qubit 1 has zero splitting: a detuned Rabi
    /// estimate with detuning |omega - Delta_2|. Reported, never applied.
    std::pair<double, double> offresonant_estimate() const {
        const double rabi = 4.0 * (kPi * p_.omega_cyclic / 2.0);
        const double detuning = std::abs(p_.drive_frequency() - p_.delta2);
        const double gen = std::hypot(rabi, detuning);
        const double amp = rabi * rabi / (gen * gen);
        const double s = std::sin(gen * pulse_ns_ / 2.0);
        return {amp, amp * s * s};
    }

    ProtocolRecord run(cplx a, cplx b, const MeasurementModel &model, std::uint64_t run_index = 0) const {
        ProtocolRecord rec;
        rec.protocol = "read";
        const StateVector target = detail::normalized_amplitudes(a, b);
        const double ramp = opts_.ramp_ns;
        double t = 0.0;
        rec.add_event(t, 0.0, "prepare",
                      "topological " + detail::amplitude_text(a, b) + ", qubit 1 ground at A, qubit 2 |e>");
        rec.add_event(t, ramp, "coupling_on", ramp > 0 ? "smooth q_ext 1/2 -> 0 at A" : "sudden at A");
        t += ramp;
        rec.add_event(t, in_.duration, "sweep", std::string("A -> anti-crossing, ") + to_string(in_.shape));
        t += in_.duration;
        rec.add_event(t, pulse_ns_, "pulse", "coupler drive at |Delta_1 - Delta_2|, even-parity branch");
        const StateVector after_pulse = post_pulse_state(a, b);
        t += pulse_ns_;
        rec.add_event(t, out_.duration, "sweep", std::string("anti-crossing -> B, ") + to_string(out_.shape));
        t += out_.duration;
        rec.add_event(t, ramp, "coupling_off", ramp > 0 ? "smooth q_ext 0 -> 1/2 at B" : "sudden at B");
        t += ramp;

        // Three-party state after the pulse against a|0 e g> + b|1 D_A e>.
        const StateVector ideal = ideal_post_pulse_state(a, b);
        const LocalZFit eq8 = fidelity_up_to_local_z(after_pulse, ideal, {0});
        rec.metrics["post_pulse_fidelity"] = eq8.fidelity;
        rec.metrics["post_pulse_branch_phase"] = eq8.angles.at(0);
        rec.metrics["post_pulse_concurrence"] = concurrence(partial_trace(after_pulse, {0, 2}));

        const StateVector at_b = u_after_pulse_ * after_pulse;
        const Matrix rho_q1 = partial_trace(at_b, {1});
        const double q1_purity = purity(rho_q1);
        const Matrix rho_tq2 = partial_trace(at_b, {0, 2});
        rec.metrics["qubit1_purity"] = q1_purity;
        rec.metrics["concurrence"] = concurrence(rho_tq2);
        rec.metrics["entropy_topological"] = von_neumann_entropy(partial_trace(at_b, {0}));
        rec.add_event(t, 0.0, "factorization_check", "qubit 1 purity at B");
        if (!(q1_purity > opts_.min_qubit1_purity)) {
            throw FactorizationError("read: qubit 1 did not factor out at point B (purity " +
                                     std::to_string(q1_purity) + ")");
        }

        // Drop qubit 1: keep the dominant eigenvector of the topological (x) qubit-2 state.
        Eigen::SelfAdjointEigenSolver<Matrix> es((rho_tq2 + rho_tq2.adjoint()) * 0.5);
        const StateVector pair(es.eigenvectors().col(3), {2, 2});
        rec.metrics["discarded_weight"] = std::max(0.0, 1.0 - es.eigenvalues()(3));

        const Operator h_topo = kron(braid_logical(hadamard_word_), Operator::identity(2));
        const StateVector rotated = h_topo * pair;
        rec.add_event(t, 0.0, "braid", "Hadamard " + to_string(hadamard_word_));
        const MeasurementResult m = measure(rotated, 0, MeasurementBasis::logical(), model, run_index);
        rec.add_event(t, 0.0, "measure", "topological qubit via qubit 1, logical basis");

        const Operator z = pauli_z();
        const Operator x = pauli_x();
        std::vector<BranchRecord> branches;
        double bitflip_fid = 0.0;
        for (const auto &mb : m.branches) {
            BranchRecord br;
            br.outcome = mb.outcome;
            br.label = mb.label;
            br.probability = mb.probability;
            if (mb.probability > 0) {
                StateVector q2 = contract(mb.state, 0, detail::ket(mb.outcome)).normalized();
                br.delivered = mb.outcome == 1 ? z * q2 : q2;
                bitflip_fid += mb.probability * fidelity(mb.outcome == 1 ? x * q2 : q2, target);
            } else {
                br.delivered = target;
            }
            branches.push_back(std::move(br));
        }
        if (model.mode == MeasurementModel::Mode::both_branches || m.outcome == 1) {
            rec.add_event(t, 0.0, "correction", "phase flip Z on qubit 2 on outcome 1");
        }
        rec.notes.push_back(
            "outcome 1 is corrected with a phase flip (Z) on qubit 2; a bit flip (NOT) does not restore the state");
        detail::finish_branches(rec, std::move(branches), target, 0, model, m.outcome);

        const auto [rabi_max, rabi_at_pulse] = offresonant_estimate();
        rec.leakage = 1.0 - q1_purity;
        rec.metrics["pulse_ns"] = pulse_ns_;
        rec.metrics["sweep_in_ns"] = in_.duration;
        rec.metrics["sweep_out_ns"] = out_.duration;
        rec.metrics["entangling_ns"] = entangling_duration();
        rec.metrics["coherence_budget_ns"] = kQubit2CoherenceNs;
        rec.metrics["entangling_fraction_of_coherence"] = entangling_duration() / kQubit2CoherenceNs;
        rec.metrics["total_ns"] = t;
        rec.metrics["eps_a"] = in_.eps_initial;
        rec.metrics["eps_b"] = out_.eps_final;
        rec.metrics["drive_frequency"] = p_.drive_frequency();
        rec.metrics["offresonant_excitation_max"] = rabi_max;
        rec.metrics["offresonant_excitation_at_pulse"] = rabi_at_pulse;
        rec.metrics["fidelity_with_bitflip_correction"] = bitflip_fid;
        rec.metrics["solver_steps"] =
            static_cast<double>(on_.steps + sweep_in_.steps + sweep_out_.steps + off_.steps);
        return rec;
    }

   private:
    Operator pulse_unitary() const {
        const double d1 = p_.qubit1.delta_max;
        const double eps = in_.eps_final;
        const Operator id2 = Operator::identity(2);
        // Even branch: rotating-frame exchange in the energy basis of qubit 1,
        // followed by the lab-frame free evolution of qubit 1 over the pulse.
        const Operator w = kron(flux_energy_basis(eps, d1).vectors, id2);
        const Operator exchange = expm_unitary(coupler_hamiltonian(p_.omega_cyclic), pulse_ns_);
        const Operator free0 = kron(expm_unitary(flux_hamiltonian(eps, d1), pulse_ns_), id2);
        const Operator even = free0 * (w * exchange * w.adjoint());
        // Odd branch: idle (off-resonant drive idealized as identity).
        const Operator odd = kron(expm_unitary(flux_hamiltonian(eps, ac_splitting(d1, 1, 0.0)), pulse_ns_), id2);
        const std::array<Operator, 2> blocks{even, odd};
        return controlled_blocks(blocks);
    }

    TopFluxFluxParams p_;
    SweepSchedule in_;
    SweepSchedule out_;
    ReadOptions opts_;
    double pulse_ns_ = 0.0;
    Propagator on_;
    Propagator sweep_in_;
    Propagator sweep_out_;
    Propagator off_;
    Operator u_to_pulse_;
    Operator u_pulse_;
    Operator u_after_pulse_;
    BraidWord hadamard_word_;
};

inline ProtocolRecord read_protocol(cplx a, cplx b, const TopFluxFluxParams &p, const SweepSchedule &sched_in,
                                    const SweepSchedule &sched_out, const MeasurementModel &model,
                                    const ReadOptions &opts = {}) {
    return ReadProtocol(p, sched_in, sched_out, opts).run(a, b, model);
}

// ---------------------------------------------------------------------------
// Ideal-gate backend

enum class Circuit { write, read };

/// CNOT with the first qubit as control.
inline Operator cnot() {
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
    return Operator(m, OpKind::unitary);
}

/// The transfer circuits with exact gates and both measurement branches.
///   write: |0>_T (a|g> + b|e>)_F -> H_T, CNOT(T -> F), measure F, X_T on e.
///   read:  (a|0> + b|1>)_T |g>_F -> CNOT(T -> F), H_T, measure T, Z_F on 1.
/// `bitflip_for_read` applies X instead of Z on the read circuit's outcome 1.
inline ProtocolRecord ideal_circuit_backend(Circuit circuit, cplx a, cplx b, bool bitflip_for_read = false) {
    const StateVector target = detail::normalized_amplitudes(a, b);
    const Operator id = Operator::identity(2);
    const MeasurementModel both{0, MeasurementModel::Mode::both_branches};
    ProtocolRecord rec;
    std::vector<BranchRecord> branches;
    if (circuit == Circuit::write) {
        rec.protocol = "ideal-write";
        StateVector psi = kron(StateVector::basis({2}, 0), target);
        psi = cnot() * (kron(hadamard(), id) * psi);
        for (const auto &mb : measurement_branches(psi, 1, MeasurementBasis::stored_energy())) {
            BranchRecord br;
            br.outcome = mb.outcome;
            br.label = mb.label;
            br.probability = mb.probability;
            StateVector topo = contract(mb.state, 1, detail::ket(mb.outcome));
            br.delivered = mb.probability > 0 ? topo.normalized() : target;
            if (mb.outcome == 1 && mb.probability > 0) {
                br.delivered = pauli_x() * br.delivered;
            }
            branches.push_back(std::move(br));
        }
    } else {
        rec.protocol = "ideal-read";
        StateVector psi = kron(target, StateVector::basis({2}, 0));
        psi = kron(hadamard(), id) * (cnot() * psi);
        for (const auto &mb : measurement_branches(psi, 0, MeasurementBasis::logical())) {
            BranchRecord br;
            br.outcome = mb.outcome;
            br.label = mb.label;
            br.probability = mb.probability;
            StateVector flux = contract(mb.state, 0, detail::ket(mb.outcome));
            br.delivered = mb.probability > 0 ? flux.normalized() : target;
            if (mb.outcome == 1 && mb.probability > 0) {
                br.delivered = (bitflip_for_read ? pauli_x() : pauli_z()) * br.delivered;
            }
            branches.push_back(std::move(br));
        }
    }
    detail::finish_branches(rec, std::move(branches), target, 0, both, -1);
    return rec;
}

}  // namespace topflux
