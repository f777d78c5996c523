// Time integration of the viscous Boussinesq system in vorticity form
//
//   d theta = -u.grad theta + (kappa + nu) Lap theta
//   d omega = -u.grad omega + d1 theta + nu Lap omega,      u = K * omega,
//
// and of its Galerkin-truncated Ito stochastic counterpart, where both
// equations additionally carry the transported noise increment
// (sqrt(2 nu)/|sigma|) sum_k sigma_k e_k.grad(.) dW^k.
//
// The dissipative parts are integrated exactly through exponential
// multipliers; the advection and buoyancy terms use explicit midpoint
// (deterministic solver, order 2) or Euler-Maruyama (stochastic solver,
// weak order 1). Pure heat modes are therefore advanced exactly.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bq2d/noise.hpp"
#include "bq2d/spectral.hpp"

namespace bq2d {

struct SimParams {
    double kappa = 1.0;        // thermal diffusivity, must stay positive
    double nu = 1.0;           // noise intensity / enhanced viscosity
    double T = 0.1;            // horizon
    double dt = 1e-3;          // step (T must be an integer multiple)
    int n = 32;                // grid points per axis
    std::optional<int> galerkin_N;  // Galerkin cutoff, required for stochastic runs
    int record_stride = 10;    // steps between field snapshots
    double s_neg = -3.0;       // negative Sobolev exponent for the H^- metric
    double eps_kernel = 1.0;   // generalized kernel exponent; 1 = Biot-Savart

    void validate() const {
        if (!(kappa > 0.0)) throw std::invalid_argument("SimParams: kappa > 0 required");
        if (!(nu > 0.0)) throw std::invalid_argument("SimParams: nu > 0 required");
        if (!(dt > 0.0)) throw std::invalid_argument("SimParams: dt > 0 required");
        if (!(T >= dt)) throw std::invalid_argument("SimParams: T >= dt required");
        if (n < 8 || n % 2 != 0) throw std::invalid_argument("SimParams: n must be even, >= 8");
        if (galerkin_N && n < 3 * *galerkin_N)
            throw std::invalid_argument("SimParams: n >= 3 * galerkin_N required");
        if (!(s_neg < 0.0)) throw std::invalid_argument("SimParams: s_neg < 0 required");
        if (!(eps_kernel > 0.0) || eps_kernel > 1.0)
            throw std::invalid_argument("SimParams: eps_kernel must lie in (0, 1]");
        const double steps = T / dt;
        if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
            throw std::invalid_argument("SimParams: T must be an integer multiple of dt");
    }

    long long steps() const { return std::llround(T / dt); }
};

struct FlowState {
    SpectralField theta;
    SpectralField omega;
    double t = 0.0;
};

/// Per-step norm series plus field snapshots every record_stride steps
/// (always including t = 0 and t = T).
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> theta_l2, theta_h1, omega_l2, omega_h1, omega_hneg;
    std::vector<FlowState> snapshots;
    std::uint64_t seed = 0;
    bool stochastic = false;
    bool zero_noise = false;
    double s_neg = -3.0;
    double dt = 0.0;
    int record_stride = 1;
    int cfl_violations = 0;
};

inline bool records_bitwise_equal(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    auto same = [](const std::vector<double>& x, const std::vector<double>& y) { return x == y; };
    if (!same(a.times, b.times) || !same(a.theta_l2, b.theta_l2) ||
        !same(a.theta_h1, b.theta_h1) || !same(a.omega_l2, b.omega_l2) ||
        !same(a.omega_h1, b.omega_h1) || !same(a.omega_hneg, b.omega_hneg))
        return false;
    if (a.snapshots.size() != b.snapshots.size()) return false;
    for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
        if (a.snapshots[i].t != b.snapshots[i].t) return false;
        if (a.snapshots[i].theta.coeffs != b.snapshots[i].theta.coeffs) return false;
        if (a.snapshots[i].omega.coeffs != b.snapshots[i].omega.coeffs) return false;
    }
    return true;
}

/// Shared integrator workspace: FFT plans, physical-space scratch, cached
/// exponential multipliers. One instance per thread.
class Stepper {
  public:
    Stepper(const WaveGrid& grid, const SimParams& params)
        : grid_(grid), params_(params), fft_(grid.n) {
        params.validate();
        const std::size_t m = grid.size();
        exp_theta_full_.resize(m);
        exp_theta_half_.resize(m);
        exp_omega_full_.resize(m);
        exp_omega_half_.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double lam = two_pi * two_pi * grid.mode_at(i).norm2();
            exp_theta_full_[i] = std::exp(-(params.kappa + params.nu) * lam * params.dt);
            exp_theta_half_[i] = std::exp(-(params.kappa + params.nu) * lam * 0.5 * params.dt);
            exp_omega_full_[i] = std::exp(-params.nu * lam * params.dt);
            exp_omega_half_[i] = std::exp(-params.nu * lam * 0.5 * params.dt);
        }
    }

    const WaveGrid& grid() const { return grid_; }
    const SimParams& params() const { return params_; }
    Fft& fft() { return fft_; }
    int cfl_violations() const { return cfl_violations_; }
    void reset_cfl_count() { cfl_violations_ = 0; }

    struct NonlinearParts {
        SpectralField theta;  // -P(u.grad theta)
        SpectralField omega;  // -P(u.grad omega) + d1 theta
        double max_speed = 0.0;
    };

    NonlinearParts nonlinear_parts(const FlowState& s) {
        auto [u1, u2] = params_.eps_kernel == 1.0 ? biot_savart(s.omega)
                                                  : biot_savart_eps(s.omega, params_.eps_kernel);
        fft_.to_physical(u1, u1_phys_);
        fft_.to_physical(u2, u2_phys_);
        double vmax2 = 0.0;
        for (std::size_t i = 0; i < u1_phys_.size(); ++i) {
            const double v2 = u1_phys_[i] * u1_phys_[i] + u2_phys_[i] * u2_phys_[i];
            if (v2 > vmax2) vmax2 = v2;
        }
        NonlinearParts out;
        out.max_speed = std::sqrt(vmax2);
        SpectralField adv_theta =
            detail::advect_physical(u1_phys_, u2_phys_, s.theta, fft_, sa_, sb_);
        SpectralField adv_omega =
            detail::advect_physical(u1_phys_, u2_phys_, s.omega, fft_, sa_, sb_);
        if (grid_.galerkin_cutoff) {
            adv_theta = project_galerkin(adv_theta, *grid_.galerkin_cutoff);
            adv_omega = project_galerkin(adv_omega, *grid_.galerkin_cutoff);
        }
        out.theta = SpectralField(grid_);
        out.omega = gradient(s.theta).first;  // buoyancy d1 theta
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            out.theta.coeffs[i] = -adv_theta.coeffs[i];
            out.omega.coeffs[i] -= adv_omega.coeffs[i];
        }
        return out;
    }

    /// Integrating-factor midpoint step for the deterministic system.
    FlowState deterministic(const FlowState& s) {
        const double dt = params_.dt;
        NonlinearParts n1 = nonlinear_parts(s);
        note_speed(n1.max_speed);

        FlowState mid{SpectralField(grid_), SpectralField(grid_), s.t + 0.5 * dt};
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            mid.theta.coeffs[i] =
                exp_theta_half_[i] * (s.theta.coeffs[i] + 0.5 * dt * n1.theta.coeffs[i]);
            mid.omega.coeffs[i] =
                exp_omega_half_[i] * (s.omega.coeffs[i] + 0.5 * dt * n1.omega.coeffs[i]);
        }
        NonlinearParts n2 = nonlinear_parts(mid);
        note_speed(n2.max_speed);

        FlowState next{SpectralField(grid_), SpectralField(grid_), s.t + dt};
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            next.theta.coeffs[i] = exp_theta_full_[i] * s.theta.coeffs[i] +
                                   dt * exp_theta_half_[i] * n2.theta.coeffs[i];
            next.omega.coeffs[i] = exp_omega_full_[i] * s.omega.coeffs[i] +
                                   dt * exp_omega_half_[i] * n2.omega.coeffs[i];
        }
        next.theta.enforce_reality();
        next.omega.enforce_reality();
        return next;
    }

    /// Euler-Maruyama step with exact dissipative factors. Drift and noise
    /// increment share the state at the step's start; the same Brownian
    /// increments feed both equations. State must already lie in H_N.
    FlowState stochastic(const FlowState& s, const SigmaFamily& sigma, BrownianDriver& driver) {
        const double dt = params_.dt;
        NonlinearParts n1 = nonlinear_parts(s);
        note_speed(n1.max_speed);
        driver.sample_increments(dt);

        FlowState next{SpectralField(grid_), SpectralField(grid_), s.t + dt};
        if (driver.zero_noise()) {
            for (std::size_t i = 0; i < grid_.size(); ++i) {
                next.theta.coeffs[i] =
                    exp_theta_full_[i] * (s.theta.coeffs[i] + dt * n1.theta.coeffs[i]);
                next.omega.coeffs[i] =
                    exp_omega_full_[i] * (s.omega.coeffs[i] + dt * n1.omega.coeffs[i]);
            }
        } else {
            const SpectralField noise_theta = noise_term(s.theta, sigma, driver);
            const SpectralField noise_omega = noise_term(s.omega, sigma, driver);
            for (std::size_t i = 0; i < grid_.size(); ++i) {
                next.theta.coeffs[i] =
                    exp_theta_full_[i] *
                    (s.theta.coeffs[i] + dt * n1.theta.coeffs[i] + noise_theta.coeffs[i]);
                next.omega.coeffs[i] =
                    exp_omega_full_[i] *
                    (s.omega.coeffs[i] + dt * n1.omega.coeffs[i] + noise_omega.coeffs[i]);
            }
        }
        if (grid_.galerkin_cutoff) {
            next.theta = project_galerkin(next.theta, *grid_.galerkin_cutoff);
            next.omega = project_galerkin(next.omega, *grid_.galerkin_cutoff);
        }
        next.theta.enforce_reality();
        next.omega.enforce_reality();
        return next;
    }

  private:
    void note_speed(double vmax) {
        // advective CFL guard: dt * max|u| * n > 1 flags the step (warning only)
        if (params_.dt * vmax * grid_.n > 1.0) ++cfl_violations_;
    }

    WaveGrid grid_;
    SimParams params_;
    Fft fft_;
    std::vector<double> exp_theta_full_, exp_theta_half_, exp_omega_full_, exp_omega_half_;
    std::vector<double> u1_phys_, u2_phys_, sa_, sb_;
    int cfl_violations_ = 0;
};

/// Right-hand side of the deterministic system; exposed mainly for tests.
inline std::pair<SpectralField, SpectralField> deterministic_rhs(const FlowState& s,
                                                                 const SimParams& params) {
    params.validate();
    WaveGrid grid = s.theta.grid;
    Stepper stepper(grid, params);
    auto n = stepper.nonlinear_parts(s);
    SpectralField dtheta = laplacian(s.theta);
    SpectralField domega = laplacian(s.omega);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dtheta.coeffs[i] = n.theta.coeffs[i] + (params.kappa + params.nu) * dtheta.coeffs[i];
        domega.coeffs[i] = n.omega.coeffs[i] + params.nu * domega.coeffs[i];
    }
    return {std::move(dtheta), std::move(domega)};
}

inline FlowState step_deterministic(const FlowState& s, const SimParams& params) {
    Stepper stepper(s.theta.grid, params);
    return stepper.deterministic(s);
}

inline FlowState step_stochastic(const FlowState& s, const SimParams& params,
                                 const SigmaFamily& sigma, BrownianDriver& driver) {
    Stepper stepper(s.theta.grid, params);
    return stepper.stochastic(s, sigma, driver);
}

namespace detail {

inline void record_norms(TrajectoryRecord& rec, const FlowState& s, double s_neg) {
    rec.times.push_back(s.t);
    rec.theta_l2.push_back(l2_norm(s.theta));
    rec.theta_h1.push_back(hs_norm(s.theta, 1.0));
    rec.omega_l2.push_back(l2_norm(s.omega));
    rec.omega_h1.push_back(hs_norm(s.omega, 1.0));
    rec.omega_hneg.push_back(hs_norm(s.omega, s_neg));
}

template <typename StepFn>
TrajectoryRecord run_loop(FlowState state, const SimParams& params, Stepper& stepper,
                          StepFn&& do_step) {
    TrajectoryRecord rec;
    rec.s_neg = params.s_neg;
    rec.dt = params.dt;
    rec.record_stride = params.record_stride;
    record_norms(rec, state, params.s_neg);
    rec.snapshots.push_back(state);
    const long long steps = params.steps();
    for (long long i = 1; i <= steps; ++i) {
        state = do_step(state);
        state.t = static_cast<double>(i) * params.dt;  // exact time grid
        record_norms(rec, state, params.s_neg);
        if (i % params.record_stride == 0 || i == steps) rec.snapshots.push_back(state);
    }
    rec.cfl_violations = stepper.cfl_violations();
    return rec;
}

}  // namespace detail

/// Integrate the deterministic viscous system to T. Initial data are
/// dealias-masked; this run is the artifact's realization of the unique
/// limit solution.
inline TrajectoryRecord run_deterministic(const SpectralField& theta0, const SpectralField& omega0,
                                          const SimParams& params) {
    params.validate();
    WaveGrid grid(params.n);
    if (theta0.grid.n != params.n || omega0.grid.n != params.n)
        throw std::invalid_argument("run_deterministic: initial data grid mismatch");
    FlowState state{theta0, omega0, 0.0};
    state.theta.grid = grid;
    state.omega.grid = grid;
    apply_dealias_mask(state.theta);
    apply_dealias_mask(state.omega);
    state.theta.enforce_reality();
    state.omega.enforce_reality();
    Stepper stepper(grid, params);
    return detail::run_loop(std::move(state), params, stepper,
                            [&](const FlowState& s) { return stepper.deterministic(s); });
}

/// Integrate the Galerkin stochastic system to T. Initial data are projected
/// onto H_N first. Reproducible bit-for-bit from (inputs, seed).
inline TrajectoryRecord run_stochastic(const SpectralField& theta0, const SpectralField& omega0,
                                       const SimParams& params, const SigmaFamily& sigma,
                                       std::uint64_t seed, bool zero_noise = false) {
    params.validate();
    if (!params.galerkin_N)
        throw std::invalid_argument("run_stochastic: galerkin_N required");
    if (sigma.nu != params.nu)
        throw std::invalid_argument("run_stochastic: sigma.nu must equal params.nu");
    WaveGrid grid(params.n, params.galerkin_N);
    if (theta0.grid.n != params.n || omega0.grid.n != params.n)
        throw std::invalid_argument("run_stochastic: initial data grid mismatch");
    FlowState state{theta0, omega0, 0.0};
    state.theta.grid = grid;
    state.omega.grid = grid;
    state.theta = project_galerkin(state.theta, *params.galerkin_N);
    state.omega = project_galerkin(state.omega, *params.galerkin_N);
    state.theta.enforce_reality();
    state.omega.enforce_reality();
    Stepper stepper(grid, params);
    BrownianDriver driver(seed, sigma, zero_noise);
    TrajectoryRecord rec =
        detail::run_loop(std::move(state), params, stepper,
                         [&](const FlowState& s) { return stepper.stochastic(s, sigma, driver); });
    rec.seed = seed;
    rec.stochastic = true;
    rec.zero_noise = zero_noise;
    return rec;
}

}  // namespace bq2d
