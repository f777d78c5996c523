// Trajectory-level functionals: the X-space distance used by the scaling
// study, energy budgets against the a priori estimates, increment-moment
// scaling diagnostics, and the Gronwall continuous-dependence check.
//
// The trajectory space is (L^2(0,T;L^2) ^ C(0,T;H^-)) x C(0,T;H^-) with H^-
// realized as a single fixed negative exponent s_neg (default -3). Norm
// convention for the product: theta component = L^2L^2 part + sup-in-time
// H^{s_neg} part, omega component = sup-in-time H^{s_neg} part, total =
// max(theta component, omega component). Time integrals use the trapezoid
// rule on the recorded grid; sups are maxima over snapshots.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bq2d/dynamics.hpp"

namespace bq2d {

inline constexpr const char* x_norm_convention =
    "theta: L2(0,T;L2) + sup_t H^{s_neg}; omega: sup_t H^{s_neg}; total: max of components";

namespace detail {

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i)
        s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

inline std::size_t nearest_index(const std::vector<double>& times, double t) {
    std::size_t best = 0;
    double gap = std::abs(times[0] - t);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double g = std::abs(times[i] - t);
        if (g < gap) {
            gap = g;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

struct XDistanceReport {
    double theta_l2l2 = 0.0;      // sqrt of int_0^T |theta_a - theta_b|_L2^2 dt
    double theta_sup_hneg = 0.0;  // sup over samples of |theta_a - theta_b|_{H^{s_neg}}
    double omega_sup_hneg = 0.0;  // same for omega
    double total = 0.0;           // max(theta_l2l2 + theta_sup_hneg, omega_sup_hneg)
    bool resampled = false;       // b was resampled onto a's snapshot times
};

/// X-norm distance between two trajectories, evaluated on snapshot times.
inline XDistanceReport x_distance(const TrajectoryRecord& a, const TrajectoryRecord& b,
                                  double s_neg) {
    if (a.snapshots.empty() || b.snapshots.empty())
        throw std::invalid_argument("x_distance: records carry no snapshots");
    const double Ta = a.snapshots.back().t, Tb = b.snapshots.back().t;
    if (std::abs(Ta - Tb) > 0.5 * std::max(a.dt, b.dt))
        throw std::invalid_argument("x_distance: horizon mismatch");

    XDistanceReport rep;
    std::vector<double> times, l2sq;
    times.reserve(a.snapshots.size());
    l2sq.reserve(a.snapshots.size());
    for (const auto& sa : a.snapshots) {
        const FlowState* sb = nullptr;
        // match by time; fall back to nearest snapshot and flag it
        for (const auto& cand : b.snapshots)
            if (cand.t == sa.t) {
                sb = &cand;
                break;
            }
        if (!sb) {
            std::vector<double> bt;
            for (const auto& cand : b.snapshots) bt.push_back(cand.t);
            sb = &b.snapshots[detail::nearest_index(bt, sa.t)];
            rep.resampled = true;
        }
        const SpectralField dtheta = sa.theta - sb->theta;
        const SpectralField domega = sa.omega - sb->omega;
        const double l2 = l2_norm(dtheta);
        times.push_back(sa.t);
        l2sq.push_back(l2 * l2);
        rep.theta_sup_hneg = std::max(rep.theta_sup_hneg, hs_norm(dtheta, s_neg));
        rep.omega_sup_hneg = std::max(rep.omega_sup_hneg, hs_norm(domega, s_neg));
    }
    rep.theta_l2l2 = std::sqrt(detail::trapezoid(times, l2sq));
    rep.total = std::max(rep.theta_l2l2 + rep.theta_sup_hneg, rep.omega_sup_hneg);
    return rep;
}

struct EnergyBudget {
    std::vector<double> times;
    // |theta_0|^2 - |theta_t|^2 - 2 kappa int_0^t |grad theta|^2; nonnegative
    // up to O(dt) for valid runs
    std::vector<double> theta_deficit;
    // |omega_t| - |omega_0| - int_0^t |grad theta|; nonpositive up to O(dt)
    std::vector<double> omega_excess;
};

inline EnergyBudget energy_budget(const TrajectoryRecord& rec, double kappa) {
    if (rec.times.size() < 2 || rec.theta_l2.size() != rec.times.size() ||
        rec.theta_h1.size() != rec.times.size() || rec.omega_l2.size() != rec.times.size())
        throw std::invalid_argument("energy_budget: record is missing norm series");
    EnergyBudget out;
    out.times = rec.times;
    out.theta_deficit.resize(rec.times.size());
    out.omega_excess.resize(rec.times.size());
    const double theta0_sq = rec.theta_l2[0] * rec.theta_l2[0];
    double int_grad_sq = 0.0;  // running trapezoid of |grad theta|^2
    double int_grad = 0.0;     // running trapezoid of |grad theta|
    out.theta_deficit[0] = 0.0;
    out.omega_excess[0] = 0.0;
    for (std::size_t i = 1; i < rec.times.size(); ++i) {
        const double h = rec.times[i] - rec.times[i - 1];
        int_grad_sq += 0.5 * h *
                       (rec.theta_h1[i] * rec.theta_h1[i] + rec.theta_h1[i - 1] * rec.theta_h1[i - 1]);
        int_grad += 0.5 * h * (rec.theta_h1[i] + rec.theta_h1[i - 1]);
        out.theta_deficit[i] =
            theta0_sq - rec.theta_l2[i] * rec.theta_l2[i] - 2.0 * kappa * int_grad_sq;
        out.omega_excess[i] = rec.omega_l2[i] - rec.omega_l2[0] - int_grad;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Increment-moment diagnostic: Monte Carlo E |<theta_t - theta_s, f_k>|^4 per
// (s, t) pair and the log-log slope in (t - s). The pairing against
// f_k = e^{2 pi i k.x} is just the k-th Fourier coefficient.
// ---------------------------------------------------------------------------

struct IncrementMomentFit {
    std::vector<std::pair<double, double>> pairs;
    std::vector<double> moments;  // fourth-moment estimate per pair
    double slope = 0.0;           // least-squares slope of log(moment) vs log(t-s)
    double intercept = 0.0;
    long long samples = 0;
};

/// Streaming accumulator so large ensembles need not be held in memory.
class IncrementMomentAccumulator {
  public:
    IncrementMomentAccumulator(Mode k, std::vector<std::pair<double, double>> pairs)
        : k_(k), pairs_(std::move(pairs)), sums_(pairs_.size(), 0.0) {
        if (pairs_.empty())
            throw std::invalid_argument("increment_moment: at least one (s,t) pair required");
        for (const auto& [s, t] : pairs_)
            if (!(t > s)) throw std::invalid_argument("increment_moment: pairs need t > s");
    }

    void add(const TrajectoryRecord& rec) {
        if (rec.snapshots.empty())
            throw std::invalid_argument("increment_moment: record carries no snapshots");
        const WaveGrid& grid = rec.snapshots.front().theta.grid;
        if (!grid.holds(k_) || grid.nyquist(k_) || k_ == Mode{0, 0})
            throw std::invalid_argument("increment_moment: mode not represented on the grid");
        std::vector<double> times;
        times.reserve(rec.snapshots.size());
        for (const auto& s : rec.snapshots) times.push_back(s.t);
        const double tol = 0.5 * rec.dt;
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            const auto is = detail::nearest_index(times, pairs_[p].first);
            const auto it = detail::nearest_index(times, pairs_[p].second);
            if (std::abs(times[is] - pairs_[p].first) > tol ||
                std::abs(times[it] - pairs_[p].second) > tol)
                throw std::invalid_argument("increment_moment: insufficient snapshots");
            const complexd inc =
                rec.snapshots[it].theta.at(k_) - rec.snapshots[is].theta.at(k_);
            const double m2 = std::norm(inc);
            sums_[p] += m2 * m2;
        }
        ++count_;
    }

    IncrementMomentFit finish() const {
        if (count_ == 0) throw std::invalid_argument("increment_moment: empty ensemble");
        IncrementMomentFit fit;
        fit.pairs = pairs_;
        fit.samples = count_;
        fit.moments.resize(pairs_.size());
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            fit.moments[p] = sums_[p] / static_cast<double>(count_);
            if (!(fit.moments[p] > 0.0))
                throw std::runtime_error("increment_moment: degenerate (zero) moment");
            const double x = std::log(pairs_[p].second - pairs_[p].first);
            const double y = std::log(fit.moments[p]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = static_cast<double>(pairs_.size());
        const double denom = n * sxx - sx * sx;
        if (denom == 0.0) throw std::runtime_error("increment_moment: need distinct lags");
        fit.slope = (n * sxy - sx * sy) / denom;
        fit.intercept = (sy - fit.slope * sx) / n;
        return fit;
    }

  private:
    Mode k_;
    std::vector<std::pair<double, double>> pairs_;
    std::vector<double> sums_;
    long long count_ = 0;
};

inline IncrementMomentFit increment_moment(const std::vector<TrajectoryRecord>& ensemble, Mode k,
                                           std::vector<std::pair<double, double>> pairs) {
    IncrementMomentAccumulator acc(k, std::move(pairs));
    for (const auto& rec : ensemble) acc.add(rec);
    return acc.finish();
}

// ---------------------------------------------------------------------------
// Continuous dependence / uniqueness check. For two deterministic runs with
// initial L^2 gap delta, verify
//   |theta1_t - theta2_t|^2 + |omega1_t - omega2_t|^2
//     <= delta^2 exp(C int_0^t (1 + |omega1|_{H1}^2 + |theta1|_{H1}^2) ds)
// with C measured at the first sample and held fixed.
// ---------------------------------------------------------------------------

struct GronwallReport {
    double delta = 0.0;       // initial L^2 gap sqrt(D(0))
    double measured_c = 0.0;  // constant fitted at the first positive sample
    double max_ratio = 0.0;   // max over samples of D(t) / envelope(t)
    double terminal_ratio = 0.0;
    double terminal_distance = 0.0;  // sqrt(D(T))
    bool identical = false;          // delta = 0 and trajectories coincide
};

inline GronwallReport gronwall_check(const TrajectoryRecord& run1, const TrajectoryRecord& run2) {
    if (run1.times != run2.times || run1.dt != run2.dt ||
        run1.snapshots.size() != run2.snapshots.size())
        throw std::invalid_argument("gronwall_check: mismatched params");
    if (run1.stochastic || run2.stochastic)
        throw std::invalid_argument("gronwall_check: deterministic runs required");

    // integrand 1 + |omega1|_{H1}^2 + |theta1|_{H1}^2 accumulated on the step grid
    std::vector<double> growth(run1.times.size(), 0.0);
    for (std::size_t i = 1; i < run1.times.size(); ++i) {
        const double h = run1.times[i] - run1.times[i - 1];
        auto g = [&](std::size_t j) {
            return 1.0 + run1.omega_h1[j] * run1.omega_h1[j] + run1.theta_h1[j] * run1.theta_h1[j];
        };
        growth[i] = growth[i - 1] + 0.5 * h * (g(i) + g(i - 1));
    }

    GronwallReport rep;
    std::vector<double> dist_sq(run1.snapshots.size());
    std::vector<double> growth_at(run1.snapshots.size());
    for (std::size_t i = 0; i < run1.snapshots.size(); ++i) {
        const auto& s1 = run1.snapshots[i];
        const auto& s2 = run2.snapshots[i];
        if (s1.t != s2.t) throw std::invalid_argument("gronwall_check: snapshot times differ");
        const double dth = l2_norm(s1.theta - s2.theta);
        const double dom = l2_norm(s1.omega - s2.omega);
        dist_sq[i] = dth * dth + dom * dom;
        const auto step = static_cast<std::size_t>(std::llround(s1.t / run1.dt));
        growth_at[i] = growth[std::min(step, growth.size() - 1)];
    }
    rep.delta = std::sqrt(dist_sq[0]);
    rep.terminal_distance = std::sqrt(dist_sq.back());

    if (dist_sq[0] == 0.0) {
        rep.identical = *std::max_element(dist_sq.begin(), dist_sq.end()) == 0.0;
        return rep;
    }
    std::size_t first = 0;
    for (std::size_t i = 1; i < dist_sq.size(); ++i)
        if (dist_sq[i] > 0.0) {
            first = i;
            break;
        }
    if (first == 0) {  // gap never grows past zero after t = 0
        rep.max_ratio = 0.0;
        return rep;
    }
    rep.measured_c = std::log(dist_sq[first] / dist_sq[0]) / growth_at[first];
    for (std::size_t i = first; i < dist_sq.size(); ++i) {
        const double envelope = dist_sq[0] * std::exp(rep.measured_c * growth_at[i]);
        const double ratio = dist_sq[i] / envelope;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (i + 1 == dist_sq.size()) rep.terminal_ratio = ratio;
    }
    return rep;
}

}  // namespace bq2d
