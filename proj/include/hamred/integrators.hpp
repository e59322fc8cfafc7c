#pragma once

/// @file integrators.hpp
/// Structure-preserving one-step schemes: explicit Stormer-Verlet for
/// separable Hamiltonians, fixed-point implicit Stormer-Verlet otherwise, and
/// explicit-midpoint RK2 for non-Hamiltonian reduced fields. Step functions
/// are stateless; trajectories for different parameters can be integrated in
/// parallel.

#include <cmath>
#include <vector>

#include "hamred/errors.hpp"
#include "hamred/fom.hpp"

namespace hamred {

enum class Scheme { SvExplicit, SvImplicit, Rk2 };

struct IntegratorConfig {
    double dt = 1e-4;
    Scheme scheme = Scheme::SvExplicit;
    double fp_tol = 1e-10;
    int fp_max_iter = 100;

    void validate() const {
        if (!(dt > 0)) throw UsageError("integrator dt must be positive");
        if (!(fp_tol > 0)) throw UsageError("fp_tol must be positive");
        if (fp_max_iter < 1) throw UsageError("fp_max_iter must be >= 1");
    }
};

/// Fixed-point iteration counters, summed over stages.
struct FpStats {
    int64_t iterations = 0;
    int64_t stages = 0;
    double mean_iterations() const { return stages ? double(iterations) / double(stages) : 0.0; }
};

template <typename T>
inline T max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
    T m = T(0);
    for (size_t i = 0; i < a.size(); ++i) {
        const T d = std::abs(a[i] - b[i]);
        if (d > m) m = d;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Explicit Stormer-Verlet for H(q,p) = H1(q) + H2(p).
// Callbacks: grad_q(q, p, out) = dH/dq and grad_p(q, p, out) = dH/dp; the
// off-stage argument is ignored by a genuinely separable Hamiltonian.
// ---------------------------------------------------------------------------
template <typename T, typename GradQ, typename GradP>
inline void sv_explicit_step(std::vector<T>& q, std::vector<T>& p, T dt, GradQ&& grad_q,
                             GradP&& grad_p, std::vector<T>& work) {
    const T half = dt / T(2);
    grad_q(q, p, work);
    for (size_t i = 0; i < p.size(); ++i) p[i] -= half * work[i];
    grad_p(q, p, work);
    for (size_t i = 0; i < q.size(); ++i) q[i] += dt * work[i];
    grad_q(q, p, work);
    for (size_t i = 0; i < p.size(); ++i) p[i] -= half * work[i];
}

// ---------------------------------------------------------------------------
// Implicit Stormer-Verlet, Picard iteration on both implicit stages.
// Initial guesses: previous-stage values.
// ---------------------------------------------------------------------------
template <typename T, typename GradQ, typename GradP>
inline void sv_implicit_step(std::vector<T>& q, std::vector<T>& p, T dt, GradQ&& grad_q,
                             GradP&& grad_p, const IntegratorConfig& cfg,
                             FpStats* stats = nullptr) {
    const size_t n = q.size();
    const T half = dt / T(2);
    std::vector<T> g(n), ph(p), next(n), f1(n), qn(n);

    // p^{n+1/2} = p - dt/2 dH/dq(q, p^{n+1/2})
    bool done = false;
    for (int it = 0; it < cfg.fp_max_iter; ++it) {
        grad_q(q, ph, g);
        for (size_t i = 0; i < n; ++i) next[i] = p[i] - half * g[i];
        const T res = max_abs_diff(next, ph);
        ph.swap(next);
        if (stats) ++stats->iterations;
        if (res <= T(cfg.fp_tol)) {
            done = true;
            break;
        }
    }
    if (stats) ++stats->stages;
    if (!done) {
        grad_q(q, ph, g);
        for (size_t i = 0; i < n; ++i) next[i] = p[i] - half * g[i];
        throw IntegrationError("implicit Stormer-Verlet: p-stage did not converge",
                               double(max_abs_diff(next, ph)));
    }

    // q^{n+1} = q + dt/2 [dH/dp(q, p^{n+1/2}) + dH/dp(q^{n+1}, p^{n+1/2})]
    grad_p(q, ph, f1);
    for (size_t i = 0; i < n; ++i) qn[i] = q[i] + dt * f1[i];
    done = false;
    for (int it = 0; it < cfg.fp_max_iter; ++it) {
        grad_p(qn, ph, g);
        for (size_t i = 0; i < n; ++i) next[i] = q[i] + half * (f1[i] + g[i]);
        const T res = max_abs_diff(next, qn);
        qn.swap(next);
        if (stats) ++stats->iterations;
        if (res <= T(cfg.fp_tol)) {
            done = true;
            break;
        }
    }
    if (stats) ++stats->stages;
    if (!done) {
        grad_p(qn, ph, g);
        for (size_t i = 0; i < n; ++i) next[i] = q[i] + half * (f1[i] + g[i]);
        throw IntegrationError("implicit Stormer-Verlet: q-stage did not converge",
                               double(max_abs_diff(next, qn)));
    }

    grad_q(qn, ph, g);
    for (size_t i = 0; i < n; ++i) p[i] = ph[i] - half * g[i];
    q.swap(qn);
}

// ---------------------------------------------------------------------------
// Explicit midpoint RK2 on a generic field: y' = y + dt F(y + dt/2 F(y)).
// ---------------------------------------------------------------------------
template <typename T, typename Field>
inline void rk2_step(std::vector<T>& y, T dt, Field&& field, std::vector<T>& k1,
                     std::vector<T>& ymid) {
    field(y, k1);
    ymid.resize(y.size());
    const T half = dt / T(2);
    for (size_t i = 0; i < y.size(); ++i) ymid[i] = y[i] + half * k1[i];
    field(ymid, k1);
    for (size_t i = 0; i < y.size(); ++i) y[i] += dt * k1[i];
}

// ---------------------------------------------------------------------------
// s-step prediction operator on Hamiltonian gradients (Stormer-Verlet flavors).
// ---------------------------------------------------------------------------
template <typename T, typename GradQ, typename GradP>
inline void predict_s(std::vector<T>& q, std::vector<T>& p, int s, const IntegratorConfig& cfg,
                      GradQ&& grad_q, GradP&& grad_p, FpStats* stats = nullptr) {
    if (s < 0) throw UsageError("predict_s: s must be non-negative");
    cfg.validate();
    std::vector<T> work(q.size());
    for (int k = 0; k < s; ++k) {
        if (cfg.scheme == Scheme::SvExplicit)
            sv_explicit_step(q, p, T(cfg.dt), grad_q, grad_p, work);
        else if (cfg.scheme == Scheme::SvImplicit)
            sv_implicit_step(q, p, T(cfg.dt), grad_q, grad_p, cfg, stats);
        else
            throw UsageError("predict_s: RK2 requires a field, not gradients");
    }
}

/// RK2 flavor of the prediction operator, on the stacked vector y.
template <typename T, typename Field>
inline void predict_s_field(std::vector<T>& y, int s, const IntegratorConfig& cfg, Field&& field) {
    if (s < 0) throw UsageError("predict_s: s must be non-negative");
    cfg.validate();
    std::vector<T> k1(y.size()), ymid(y.size());
    for (int k = 0; k < s; ++k) rk2_step(y, T(cfg.dt), field, k1, ymid);
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

struct Trajectory {
    std::vector<double> times;               // t_n = n dt exactly
    std::vector<std::vector<double>> qs;
    std::vector<std::vector<double>> ps;
    std::vector<double> mu;                  // flat parameter record
    double dt = 0.0;

    size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

/// Integrates the full-order model for n_steps, recording every state.
/// Explicit scheme for separable (wave) families, implicit otherwise.
inline Trajectory integrate_fom(const FomSystem& fom, const State& y0, int n_steps,
                                const IntegratorConfig& cfg, FpStats* stats = nullptr) {
    if (n_steps < 1) throw UsageError("integrate: n_steps must be >= 1");
    cfg.validate();
    Trajectory traj;
    traj.dt = cfg.dt;
    traj.mu = fom.param_vector();
    traj.times.reserve(n_steps + 1);
    traj.qs.reserve(n_steps + 1);
    traj.ps.reserve(n_steps + 1);

    std::vector<double> q = y0.q, p = y0.p, work(q.size());
    traj.times.push_back(0.0);
    traj.qs.push_back(q);
    traj.ps.push_back(p);

    auto gq = [&](const std::vector<double>& qq, const std::vector<double>& pp,
                  std::vector<double>& out) { fom.grad_q(qq, pp, out); };
    auto gp = [&](const std::vector<double>& qq, const std::vector<double>& pp,
                  std::vector<double>& out) { fom.grad_p(qq, pp, out); };

    const bool use_explicit =
        cfg.scheme == Scheme::SvExplicit || (fom.separable() && cfg.scheme != Scheme::SvImplicit);
    for (int k = 1; k <= n_steps; ++k) {
        if (use_explicit)
            sv_explicit_step(q, p, cfg.dt, gq, gp, work);
        else
            sv_implicit_step(q, p, cfg.dt, gq, gp, cfg, stats);
        traj.times.push_back(k * cfg.dt);
        traj.qs.push_back(q);
        traj.ps.push_back(p);
    }
    return traj;
}

}  // namespace hamred
