#pragma once

/// @file fom.hpp
/// Full-order models: periodic 1d grids, initial conditions, Hamiltonians and
/// their gradients for the linear/non-linear wave and shallow water
/// discretizations. All stencils wrap indices mod N.

#include <cmath>
#include <variant>
#include <vector>

#include "hamred/errors.hpp"

namespace hamred {

enum class FomFamily { LinearWave, NonlinearWave, ShallowWater };

inline const char* family_name(FomFamily f) {
    switch (f) {
        case FomFamily::LinearWave: return "linear_wave";
        case FomFamily::NonlinearWave: return "nonlinear_wave";
        case FomFamily::ShallowWater: return "shallow_water";
    }
    return "?";
}

struct WaveParams {
    double mu_a = 0.0;  // squared wave velocity
    double mu_b = 0.0;
    double mu_c = 0.0;
    bool nonlinear = false;

    static WaveParams linear(double mu_a) { return WaveParams{mu_a, 0.0, 0.0, false}; }
    static WaveParams cubic(double mu_a, double mu_b, double mu_c) {
        if (mu_a <= 0 || mu_b <= 0 || mu_c <= 0)
            throw UsageError("nonlinear wave parameters must be strictly positive");
        return WaveParams{mu_a, mu_b, mu_c, true};
    }
};

struct SWParams {
    double c = 0.0;      // bump center
    double sigma = 0.1;  // bump width

    static SWParams make(double c, double sigma) {
        if (sigma <= 0) throw UsageError("shallow water sigma must be positive");
        return SWParams{c, sigma};
    }
};

using PhysParams = std::variant<WaveParams, SWParams>;

struct Grid1D {
    int n = 0;
    double x0 = 0.0;
    double dx = 0.0;
    bool periodic = true;

    // Wave problems live on [0,1] with dx = 1/(N-1); shallow water uses N
    // equispaced nodes on [-1,1) without the duplicated seam.
    static Grid1D wave(int n) { return Grid1D{n, 0.0, 1.0 / (n - 1), true}; }
    static Grid1D shallow_water(int n) { return Grid1D{n, -1.0, 2.0 / n, true}; }

    double node(int i) const { return x0 + i * dx; }
};

/// Full-order phase-space point with its parameter record.
struct State {
    std::vector<double> q;
    std::vector<double> p;
    PhysParams mu;
    double t = 0.0;
};

/// Compactly supported C^1 bump, zero beyond r = 2.
inline double bump(double r) {
    if (r <= 1.0) return 1.0 - 1.5 * r * r + 0.75 * r * r * r;
    if (r <= 2.0) {
        const double s = 2.0 - r;
        return 0.25 * s * s * s;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Centered periodic difference (D_x phi)_i = (phi_{i+1} - phi_{i-1}) / (2 dx).
// ---------------------------------------------------------------------------
template <typename T>
inline void dx_apply(const std::vector<T>& phi, double dx, std::vector<T>& out) {
    const int n = static_cast<int>(phi.size());
    out.resize(phi.size());
    const T inv = T(1.0 / (2.0 * dx));
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1 == n) ? 0 : i + 1;
        const int im = (i == 0) ? n - 1 : i - 1;
        out[i] = (phi[ip] - phi[im]) * inv;
    }
}

inline std::vector<double> dx_apply(const std::vector<double>& phi, double dx) {
    std::vector<double> out;
    dx_apply(phi, dx, out);
    return out;
}

/// One wave-type or shallow-water system: family, parameters and grid.
/// Gradients and Hamiltonians are pure functions, safe for concurrent calls.
struct FomSystem {
    FomFamily family = FomFamily::LinearWave;
    Grid1D grid;
    WaveParams wave;
    SWParams sw;

    static FomSystem linear_wave(int n, double mu_a) {
        return FomSystem{FomFamily::LinearWave, Grid1D::wave(n), WaveParams::linear(mu_a), {}};
    }
    static FomSystem nonlinear_wave(int n, double mu_a, double mu_b, double mu_c) {
        return FomSystem{FomFamily::NonlinearWave, Grid1D::wave(n),
                         WaveParams::cubic(mu_a, mu_b, mu_c), {}};
    }
    static FomSystem shallow_water(int n, double c, double sigma) {
        return FomSystem{FomFamily::ShallowWater, Grid1D::shallow_water(n), {},
                         SWParams::make(c, sigma)};
    }

    int n() const { return grid.n; }
    bool is_wave() const { return family != FomFamily::ShallowWater; }
    bool separable() const { return is_wave(); }

    PhysParams params() const {
        if (is_wave()) return wave;
        return sw;
    }

    /// Parameters as a flat vector, in the order fed to the reduced networks.
    std::vector<double> param_vector() const {
        switch (family) {
            case FomFamily::LinearWave: return {wave.mu_a};
            case FomFamily::NonlinearWave: return {wave.mu_a, wave.mu_b, wave.mu_c};
            case FomFamily::ShallowWater: return {sw.c, sw.sigma};
        }
        return {};
    }

    State initial_state() const {
        State s;
        s.q.resize(grid.n);
        s.p.assign(grid.n, 0.0);
        if (is_wave()) {
            for (int i = 0; i < grid.n; ++i) s.q[i] = bump(10.0 * std::abs(grid.node(i) - 0.5));
            s.mu = wave;
        } else {
            const double pref = 0.02 / (sw.sigma * std::sqrt(2.0 * M_PI));
            for (int i = 0; i < grid.n; ++i) {
                const double z = (grid.node(i) - sw.c) / sw.sigma;
                s.q[i] = pref * std::exp(-0.5 * z * z);
            }
            s.mu = sw;
        }
        return s;
    }

    template <typename T>
    T hamiltonian(const std::vector<T>& q, const std::vector<T>& p) const {
        if (is_wave()) return wave_h(q, p);
        return sw_h(q, p);
    }

    /// dH/dq. Wave: independent of p (separable); shallow water uses both.
    template <typename T>
    void grad_q(const std::vector<T>& q, const std::vector<T>& p, std::vector<T>& out) const {
        if (is_wave()) {
            wave_grad_u(q, out);
        } else {
            sw_grad_chi(q, p, out);
        }
    }

    /// dH/dp.
    template <typename T>
    void grad_p(const std::vector<T>& q, const std::vector<T>& p, std::vector<T>& out) const {
        if (is_wave()) {
            out = p;  // H^2 = sum p^2 / 2
        } else {
            sw_grad_phi(q, p, out);
        }
    }

  private:
    template <typename T>
    T wprime(T z) const {
        if (!wave.nonlinear) return z;
        return z + T(wave.mu_b) * std::cos(T(wave.mu_b) * z);
    }

    template <typename T>
    T wave_h(const std::vector<T>& u, const std::vector<T>& v) const {
        const int n = grid.n;
        const T invdx = T(1.0 / grid.dx);
        T acc = T(0);
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1 == n) ? 0 : i + 1;
            const T z = (u[ip] - u[i]) * invdx;
            T w = T(0.5) * z * z;
            if (wave.nonlinear) w += std::sin(T(wave.mu_b) * z);
            acc += T(wave.mu_a) * w;
            if (wave.nonlinear) acc += T(10.0 * wave.mu_c) * u[i] * u[i] * u[i];
        }
        for (int i = 0; i < n; ++i) acc += T(0.5) * v[i] * v[i];
        return acc;
    }

    template <typename T>
    void wave_grad_u(const std::vector<T>& u, std::vector<T>& out) const {
        const int n = grid.n;
        out.resize(u.size());
        const T invdx = T(1.0 / grid.dx);
        const T coef = T(wave.mu_a) * invdx;
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1 == n) ? 0 : i + 1;
            const int im = (i == 0) ? n - 1 : i - 1;
            const T fwd = (u[ip] - u[i]) * invdx;
            const T bwd = (u[i] - u[im]) * invdx;
            T g = coef * (wprime(bwd) - wprime(fwd));
            if (wave.nonlinear) g += T(30.0 * wave.mu_c) * u[i] * u[i];
            out[i] = g;
        }
    }

    template <typename T>
    T sw_h(const std::vector<T>& chi, const std::vector<T>& phi) const {
        std::vector<T> dphi;
        dx_apply(phi, grid.dx, dphi);
        T acc = T(0);
        for (size_t i = 0; i < chi.size(); ++i)
            acc += T(0.5) * (T(1) + chi[i]) * dphi[i] * dphi[i] + T(0.5) * chi[i] * chi[i];
        return acc;
    }

    template <typename T>
    void sw_grad_chi(const std::vector<T>& chi, const std::vector<T>& phi,
                     std::vector<T>& out) const {
        std::vector<T> dphi;
        dx_apply(phi, grid.dx, dphi);
        out.resize(chi.size());
        for (size_t i = 0; i < chi.size(); ++i) out[i] = T(0.5) * dphi[i] * dphi[i] + chi[i];
    }

    template <typename T>
    void sw_grad_phi(const std::vector<T>& chi, const std::vector<T>& phi,
                     std::vector<T>& out) const {
        std::vector<T> dphi;
        dx_apply(phi, grid.dx, dphi);
        for (size_t i = 0; i < chi.size(); ++i) dphi[i] *= (T(1) + chi[i]);
        dx_apply(dphi, grid.dx, out);
        for (auto& v : out) v = -v;
    }
};

// ---------------------------------------------------------------------------
// State-level entry points; the family is taken from the parameter record.
// ---------------------------------------------------------------------------

inline FomSystem system_for(const State& s) {
    const int n = static_cast<int>(s.q.size());
    if (s.q.size() != s.p.size()) throw DimensionError("state q/p length mismatch");
    if (const auto* wp = std::get_if<WaveParams>(&s.mu)) {
        FomSystem f;
        f.family = wp->nonlinear ? FomFamily::NonlinearWave : FomFamily::LinearWave;
        f.grid = Grid1D::wave(n);
        f.wave = *wp;
        return f;
    }
    FomSystem f;
    f.family = FomFamily::ShallowWater;
    f.grid = Grid1D::shallow_water(n);
    f.sw = std::get<SWParams>(s.mu);
    return f;
}

inline State initial_state(const FomSystem& fom) { return fom.initial_state(); }

inline double wave_hamiltonian(const State& s) {
    if (!std::holds_alternative<WaveParams>(s.mu))
        throw UsageError("wave_hamiltonian: state is not a wave state");
    return system_for(s).hamiltonian(s.q, s.p);
}

inline std::pair<std::vector<double>, std::vector<double>> wave_grad(const State& s) {
    if (!std::holds_alternative<WaveParams>(s.mu))
        throw UsageError("wave_grad: state is not a wave state");
    const FomSystem f = system_for(s);
    std::vector<double> du, dv;
    f.grad_q(s.q, s.p, du);
    f.grad_p(s.q, s.p, dv);
    return {du, dv};
}

inline double sw_hamiltonian(const State& s) {
    if (!std::holds_alternative<SWParams>(s.mu))
        throw UsageError("sw_hamiltonian: state is not a shallow-water state");
    return system_for(s).hamiltonian(s.q, s.p);
}

inline std::pair<std::vector<double>, std::vector<double>> sw_grad(const State& s) {
    if (!std::holds_alternative<SWParams>(s.mu))
        throw UsageError("sw_grad: state is not a shallow-water state");
    const FomSystem f = system_for(s);
    std::vector<double> dchi, dphi;
    f.grad_q(s.q, s.p, dchi);
    f.grad_p(s.q, s.p, dphi);
    return {dchi, dphi};
}

}  // namespace hamred
