// Orchestration of the scaling-limit study and the approximate-uniqueness
// illustration: ensembles of stochastic trajectories per noise family,
// X-distance statistics against the deterministic solution, exceedance
// probabilities.
//
// Trajectories run in parallel with independent drivers; every reduction is
// ordered by trajectory index, so thread count never changes results. Seeds
// derive as split_seed(ensemble_seed, trajectory_index); studies derive
// ensemble seeds as split_seed(master_seed, slot).

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bq2d/analysis.hpp"
#include "bq2d/dynamics.hpp"
#include "bq2d/noise.hpp"

namespace bq2d {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

struct EnsembleResult {
    std::vector<double> distances;  // X-distance to the reference, by trajectory index
    TrajectoryRecord mean_record;   // ensemble mean of snapshots (if requested)
    bool has_mean = false;
    int cfl_violations = 0;
};

/// Run M independent stochastic trajectories and evaluate each one's
/// X-distance to the reference record. Trajectory j uses seed
/// split_seed(ensemble_seed, j).
inline EnsembleResult run_ensemble(const SpectralField& theta0, const SpectralField& omega0,
                                   const SimParams& params, const SigmaFamily& sigma, int M,
                                   std::uint64_t ensemble_seed, const TrajectoryRecord& reference,
                                   bool want_mean = false, int threads = 0) {
    if (M < 1) throw std::invalid_argument("run_ensemble: M >= 1 required");
    const int nthreads = resolve_threads(threads);
    EnsembleResult result;
    result.distances.resize(M);

    std::vector<TrajectoryRecord> batch;
    std::vector<FlowState> mean_snapshots;
    for (int start = 0; start < M; start += nthreads) {
        const int count = std::min(nthreads, M - start);
        batch.assign(count, TrajectoryRecord{});
        std::vector<std::exception_ptr> errors(count);
        {
            std::vector<std::thread> pool;
            pool.reserve(count);
            for (int t = 0; t < count; ++t)
                pool.emplace_back([&, t] {
                    try {
                        const int j = start + t;
                        batch[t] = run_stochastic(theta0, omega0, params, sigma,
                                                  split_seed(ensemble_seed, j));
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            for (auto& th : pool) th.join();
        }
        for (int t = 0; t < count; ++t)
            if (errors[t]) std::rethrow_exception(errors[t]);
        // ordered reduction over trajectory index
        for (int t = 0; t < count; ++t) {
            const int j = start + t;
            result.distances[j] = x_distance(batch[t], reference, params.s_neg).total;
            result.cfl_violations += batch[t].cfl_violations;
            if (want_mean) {
                if (mean_snapshots.empty()) {
                    mean_snapshots = batch[t].snapshots;
                    result.mean_record.dt = batch[t].dt;
                    result.mean_record.record_stride = batch[t].record_stride;
                    result.mean_record.s_neg = batch[t].s_neg;
                    result.mean_record.stochastic = true;
                } else {
                    for (std::size_t i = 0; i < mean_snapshots.size(); ++i) {
                        mean_snapshots[i].theta += batch[t].snapshots[i].theta;
                        mean_snapshots[i].omega += batch[t].snapshots[i].omega;
                    }
                }
            }
        }
    }
    if (want_mean) {
        const double inv = 1.0 / static_cast<double>(M);
        for (auto& s : mean_snapshots) {
            s.theta *= inv;
            s.omega *= inv;
        }
        result.mean_record.snapshots = std::move(mean_snapshots);
        for (const auto& s : result.mean_record.snapshots) {
            result.mean_record.times.push_back(s.t);
            result.mean_record.theta_l2.push_back(l2_norm(s.theta));
            result.mean_record.theta_h1.push_back(hs_norm(s.theta, 1.0));
            result.mean_record.omega_l2.push_back(l2_norm(s.omega));
            result.mean_record.omega_h1.push_back(hs_norm(s.omega, 1.0));
            result.mean_record.omega_hneg.push_back(hs_norm(s.omega, result.mean_record.s_neg));
        }
        result.has_mean = true;
    }
    return result;
}

inline double exceedance_probability(const std::vector<double>& distances, double eps) {
    if (distances.empty()) return 0.0;
    std::size_t c = 0;
    for (double d : distances)
        if (d > eps) ++c;
    return static_cast<double>(c) / static_cast<double>(distances.size());
}

struct ExperimentRow {
    int N = 0;
    double beta = 0.0;
    double noise_ratio = 0.0;  // |sigma^N|_linf / |sigma^N|_l2
    int M = 0;
    double mean_x_distance = 0.0;
    double std_x_distance = 0.0;
    double exceedance_prob = 0.0;
    double wall_time_s = 0.0;
};

struct ExperimentTable {
    std::vector<ExperimentRow> rows;  // sorted by noise_ratio descending
    double epsilon = 0.0;
    double no_noise_gap = 0.0;
    std::uint64_t master_seed = 0;
    double beta = 0.0;
    double nu = 0.0;
    double s_neg = -3.0;
    SimParams params;
};

inline bool tables_equal_modulo_walltime(const ExperimentTable& a, const ExperimentTable& b) {
    if (a.rows.size() != b.rows.size() || a.epsilon != b.epsilon ||
        a.no_noise_gap != b.no_noise_gap)
        return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& x = a.rows[i];
        const auto& y = b.rows[i];
        if (x.N != y.N || x.beta != y.beta || x.noise_ratio != y.noise_ratio || x.M != y.M ||
            x.mean_x_distance != y.mean_x_distance || x.std_x_distance != y.std_x_distance ||
            x.exceedance_prob != y.exceedance_prob)
            return false;
    }
    return true;
}

/// The scaling-limit study: compute the deterministic solution once, then
/// for each N run an M-trajectory ensemble under sigma_example(N, beta) and
/// aggregate X-distance statistics. epsilon <= 0 selects the default
/// 2 x (no-noise discretization gap), measured with a zero-increment run.
inline ExperimentTable scaling_limit_study(const SpectralField& theta0,
                                           const SpectralField& omega0, const SimParams& params,
                                           const std::vector<int>& N_list, double beta, int M,
                                           double epsilon, std::uint64_t master_seed,
                                           int threads = 0) {
    params.validate();
    if (!params.galerkin_N)
        throw std::invalid_argument("scaling_limit_study: galerkin_N required");
    if (N_list.empty()) throw std::invalid_argument("scaling_limit_study: empty N list");
    for (int N : N_list) {
        const int reach = beta <= 1.0 ? N : 2 * N;
        if (*params.galerkin_N + reach > params.n / 2 - 1)
            throw std::invalid_argument("scaling_limit_study: grid too small for max N");
    }

    const TrajectoryRecord phi = run_deterministic(theta0, omega0, params);

    // no-noise discretization gap: Euler drift with zero increments vs phi
    const SigmaFamily sigma_probe = sigma_example(N_list.front(), beta, params.nu);
    const TrajectoryRecord drift =
        run_stochastic(theta0, omega0, params, sigma_probe, master_seed, /*zero_noise=*/true);
    const double gap = x_distance(drift, phi, params.s_neg).total;

    ExperimentTable table;
    table.no_noise_gap = gap;
    table.epsilon = epsilon > 0.0 ? epsilon : 2.0 * gap;
    table.master_seed = master_seed;
    table.beta = beta;
    table.nu = params.nu;
    table.s_neg = params.s_neg;
    table.params = params;

    for (std::size_t ri = 0; ri < N_list.size(); ++ri) {
        const auto t0 = std::chrono::steady_clock::now();
        const int N = N_list[ri];
        const SigmaFamily sigma = sigma_example(N, beta, params.nu);
        const EnsembleResult ens =
            run_ensemble(theta0, omega0, params, sigma, M, split_seed(master_seed, ri), phi,
                         /*want_mean=*/false, threads);
        ExperimentRow row;
        row.N = N;
        row.beta = beta;
        row.noise_ratio = noise_ratio(sigma);
        row.M = M;
        double sum = 0.0;
        for (double d : ens.distances) sum += d;
        row.mean_x_distance = sum / M;
        double var = 0.0;
        for (double d : ens.distances) var += (d - row.mean_x_distance) * (d - row.mean_x_distance);
        row.std_x_distance = M > 1 ? std::sqrt(var / (M - 1)) : 0.0;
        row.exceedance_prob = exceedance_probability(ens.distances, table.epsilon);
        row.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        table.rows.push_back(row);
    }
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const ExperimentRow& a, const ExperimentRow& b) {
                         return a.noise_ratio > b.noise_ratio;
                     });
    return table;
}

struct UniquenessSummary {
    int N = 0;
    double beta = 0.0;
    int M = 0;
    double mean_trajectory_gap = 0.0;  // X-distance between the two ensemble means
    double distance_mean_gap = 0.0;    // |mean_A - mean_B| of distance-to-phi
    double mean_distance_a = 0.0;
    double mean_distance_b = 0.0;
    std::uint64_t seed_a = 0;
    std::uint64_t seed_b = 0;
};

/// Two independent ensembles for the same family; their empirical mean
/// trajectories and distance-to-phi distributions approach each other as N
/// grows (approximate uniqueness in law).
inline UniquenessSummary approximate_uniqueness_study(const SpectralField& theta0,
                                                      const SpectralField& omega0,
                                                      const SimParams& params, int N, double beta,
                                                      int M, std::uint64_t master_seed,
                                                      int threads = 0) {
    const TrajectoryRecord phi = run_deterministic(theta0, omega0, params);
    const SigmaFamily sigma = sigma_example(N, beta, params.nu);
    UniquenessSummary out;
    out.N = N;
    out.beta = beta;
    out.M = M;
    out.seed_a = split_seed(master_seed, 1);
    out.seed_b = split_seed(master_seed, 2);
    const EnsembleResult a =
        run_ensemble(theta0, omega0, params, sigma, M, out.seed_a, phi, true, threads);
    const EnsembleResult b =
        run_ensemble(theta0, omega0, params, sigma, M, out.seed_b, phi, true, threads);
    out.mean_trajectory_gap = x_distance(a.mean_record, b.mean_record, params.s_neg).total;
    double ma = 0.0, mb = 0.0;
    for (double d : a.distances) ma += d;
    for (double d : b.distances) mb += d;
    ma /= M;
    mb /= M;
    out.mean_distance_a = ma;
    out.mean_distance_b = mb;
    out.distance_mean_gap = std::abs(ma - mb);
    return out;
}

}  // namespace bq2d
