// Command-line entry points. Subcommands:
//   simulate-det     deterministic viscous run -> series.csv + final snapshot
//   simulate-sde     stochastic Galerkin run   -> series.csv + final snapshot
//   scaling-limit    ensemble study over N     -> table.csv
//   covariance       print Q(x,x) for a sigma family
//   check-invariants run the module invariant suite on a configured instance
//   rerun            re-execute a command from its metadata sidecar
//
// Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.
// Every output directory receives a metadata.json sidecar with the full
// configuration and seeds; "rerun" reproduces the CSVs byte-for-byte
// (wall-time columns aside).

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bq2d/analysis.hpp"
#include "bq2d/dynamics.hpp"
#include "bq2d/experiments.hpp"
#include "bq2d/io.hpp"
#include "bq2d/noise.hpp"
#include "bq2d/presets.hpp"
#include "bq2d/version.hpp"

namespace bq2d {

struct RunConfig {
    double kappa = 1.0;
    double nu = 1.0;
    double T = 0.1;
    double dt = 1e-3;
    int n = 32;
    int galerkin_N = 0;  // 0 = auto (n / 3) where a cutoff is needed
    int record_stride = 10;
    double s_neg = -3.0;
    double eps_kernel = 1.0;
    std::string preset = "two-mode";
    std::string ic_file;
    int sigma_N = 4;
    double sigma_beta = 0.0;
    std::uint64_t seed = 12345;
    bool zero_noise = false;
    std::string out_dir;
    std::vector<int> N_list{1, 2, 4, 8};
    int M = 20;
    double epsilon = 0.0;  // <= 0: default to 2 x measured no-noise gap
    int threads = 0;

    SimParams sim_params(bool with_cutoff) const {
        SimParams p;
        p.kappa = kappa;
        p.nu = nu;
        p.T = T;
        p.dt = dt;
        p.n = n;
        p.record_stride = record_stride;
        p.s_neg = s_neg;
        p.eps_kernel = eps_kernel;
        if (with_cutoff) p.galerkin_N = galerkin_N > 0 ? galerkin_N : n / 3;
        return p;
    }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"kappa", c.kappa},
                       {"nu", c.nu},
                       {"T", c.T},
                       {"dt", c.dt},
                       {"n", c.n},
                       {"galerkin_N", c.galerkin_N},
                       {"record_stride", c.record_stride},
                       {"s_neg", c.s_neg},
                       {"eps_kernel", c.eps_kernel},
                       {"preset", c.preset},
                       {"ic_file", c.ic_file},
                       {"sigma_N", c.sigma_N},
                       {"sigma_beta", c.sigma_beta},
                       {"seed", c.seed},
                       {"zero_noise", c.zero_noise},
                       {"out_dir", c.out_dir},
                       {"N_list", c.N_list},
                       {"M", c.M},
                       {"epsilon", c.epsilon},
                       {"threads", c.threads}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    j.at("kappa").get_to(c.kappa);
    j.at("nu").get_to(c.nu);
    j.at("T").get_to(c.T);
    j.at("dt").get_to(c.dt);
    j.at("n").get_to(c.n);
    j.at("galerkin_N").get_to(c.galerkin_N);
    j.at("record_stride").get_to(c.record_stride);
    j.at("s_neg").get_to(c.s_neg);
    j.at("eps_kernel").get_to(c.eps_kernel);
    j.at("preset").get_to(c.preset);
    j.at("ic_file").get_to(c.ic_file);
    j.at("sigma_N").get_to(c.sigma_N);
    j.at("sigma_beta").get_to(c.sigma_beta);
    j.at("seed").get_to(c.seed);
    j.at("zero_noise").get_to(c.zero_noise);
    j.at("out_dir").get_to(c.out_dir);
    j.at("N_list").get_to(c.N_list);
    j.at("M").get_to(c.M);
    j.at("epsilon").get_to(c.epsilon);
    j.at("threads").get_to(c.threads);
}

namespace cli_detail {

inline std::pair<SpectralField, SpectralField> initial_conditions(const RunConfig& cfg) {
    if (!cfg.ic_file.empty()) {
        auto [theta, omega] = read_snapshot(cfg.ic_file);
        if (theta.grid.n != cfg.n)
            throw std::invalid_argument("snapshot grid size differs from --n");
        return {std::move(theta), std::move(omega)};
    }
    return make_preset(cfg.preset, WaveGrid(cfg.n));
}

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw std::invalid_argument("--out is required");
    std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_sidecar(const std::filesystem::path& dir, const std::string& subcommand,
                          const RunConfig& cfg) {
    write_metadata(dir / "metadata.json", make_metadata(subcommand, nlohmann::json(cfg)));
}

inline int exec_simulate_det(const RunConfig& cfg, std::ostream& out) {
    const auto dir = prepare_out_dir(cfg);
    auto [theta0, omega0] = initial_conditions(cfg);
    const TrajectoryRecord rec = run_deterministic(theta0, omega0, cfg.sim_params(false));
    {
        std::ofstream os(dir / "series.csv", std::ios::trunc);
        write_series_csv(os, rec);
    }
    write_snapshot(dir / "final_state.bq2d", rec.snapshots.back().theta,
                   rec.snapshots.back().omega);
    write_sidecar(dir, "simulate-det", cfg);
    if (rec.cfl_violations > 0)
        out << "warning: advective CFL exceeded on " << rec.cfl_violations << " stage(s)\n";
    out << "final t=" << io_fmt(rec.times.back()) << " theta_l2=" << io_fmt(rec.theta_l2.back())
        << " omega_l2=" << io_fmt(rec.omega_l2.back()) << "\n";
    return 0;
}

inline int exec_simulate_sde(const RunConfig& cfg, std::ostream& out) {
    const auto dir = prepare_out_dir(cfg);
    auto [theta0, omega0] = initial_conditions(cfg);
    const SimParams params = cfg.sim_params(true);
    const SigmaFamily sigma = sigma_example(cfg.sigma_N, cfg.sigma_beta, cfg.nu);
    const TrajectoryRecord rec =
        run_stochastic(theta0, omega0, params, sigma, cfg.seed, cfg.zero_noise);
    {
        std::ofstream os(dir / "series.csv", std::ios::trunc);
        write_series_csv(os, rec);
    }
    write_snapshot(dir / "final_state.bq2d", rec.snapshots.back().theta,
                   rec.snapshots.back().omega);
    write_sidecar(dir, "simulate-sde", cfg);
    if (rec.cfl_violations > 0)
        out << "warning: advective CFL exceeded on " << rec.cfl_violations << " stage(s)\n";
    out << "final t=" << io_fmt(rec.times.back()) << " theta_l2=" << io_fmt(rec.theta_l2.back())
        << " omega_l2=" << io_fmt(rec.omega_l2.back()) << " seed=" << rec.seed << "\n";
    return 0;
}

inline int exec_scaling_limit(const RunConfig& cfg, std::ostream& out) {
    const auto dir = prepare_out_dir(cfg);
    auto [theta0, omega0] = initial_conditions(cfg);
    const SimParams params = cfg.sim_params(true);
    const ExperimentTable table = scaling_limit_study(theta0, omega0, params, cfg.N_list,
                                                      cfg.sigma_beta, cfg.M, cfg.epsilon,
                                                      cfg.seed, cfg.threads);
    {
        std::ofstream os(dir / "table.csv", std::ios::trunc);
        write_table_csv(os, table);
    }
    write_sidecar(dir, "scaling-limit", cfg);
    out << "no_noise_gap=" << io_fmt(table.no_noise_gap) << " epsilon=" << io_fmt(table.epsilon)
        << "\n";
    std::ostringstream rows;
    write_table_csv(rows, table);
    out << rows.str();
    return 0;
}

inline int exec_covariance(const RunConfig& cfg, std::ostream& out) {
    const SigmaFamily sigma = sigma_example(cfg.sigma_N, cfg.sigma_beta, cfg.nu);
    const auto q = covariance_origin(sigma);
    out << io_fmt(q[0][0]) << " " << io_fmt(q[0][1]) << "\n"
        << io_fmt(q[1][0]) << " " << io_fmt(q[1][1]) << "\n";
    return 0;
}

inline int exec_check_invariants(const RunConfig& cfg, std::ostream& out) {
    bool all_pass = true;
    auto report = [&](const std::string& name, bool ok, double value) {
        all_pass = all_pass && ok;
        out << (ok ? "PASS " : "FAIL ") << name << " (" << io_fmt(value) << ")\n";
    };

    const WaveGrid grid(cfg.n);
    Fft fft(cfg.n);
    const SpectralField f = random_field(grid, cfg.seed, cfg.n / 3, 1.0);
    const SpectralField w = random_field(grid, splitmix64(cfg.seed), cfg.n / 3, 1.0);
    auto [u1, u2] = biot_savart(w);

    // reality is preserved exactly by every operation
    double defect = gradient(f).first.reality_defect();
    defect = std::max(defect, laplacian(f).reality_defect());
    defect = std::max(defect, u1.reality_defect());
    defect = std::max(defect, project_galerkin(f, cfg.n / 4).reality_defect());
    defect = std::max(defect, advect(u1, u2, f, fft).reality_defect());
    report("hermitian-zero-mean", defect <= 1e-12, defect);

    // 2 pi i k . uhat_k vanishes (to the rounding of the dot product itself)
    double div_worst = 0.0;
    for (std::size_t i = 0; i < u1.coeffs.size(); ++i) {
        const Mode k = grid.mode_at(i);
        const complexd a = static_cast<double>(k.k1) * u1.coeffs[i];
        const complexd b = static_cast<double>(k.k2) * u2.coeffs[i];
        const double scale = std::abs(a) + std::abs(b);
        if (scale == 0.0) continue;
        div_worst = std::max(div_worst, std::abs(a + b) / scale);
    }
    report("biot-savart-divergence", div_worst <= 1e-15, div_worst);

    // perp-divergence of the velocity reproduces omega on nonzero modes
    const SpectralField curl = perp_divergence(u1, u2);
    double curl_rel = 0.0;
    for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
        if (w.coeffs[i] == complexd{0.0, 0.0}) continue;
        curl_rel = std::max(curl_rel, std::abs(curl.coeffs[i] - w.coeffs[i]) / std::abs(w.coeffs[i]));
    }
    report("biot-savart-curl-roundtrip", curl_rel < 1e-13, curl_rel);

    const double neutrality =
        std::abs(inner_product(advect(u1, u2, f, fft), f).real()) /
        std::max(1.0, l2_norm(f) * l2_norm(f) * std::max(l2_norm(u1), l2_norm(u2)));
    report("advect-energy-neutrality", neutrality <= 1e-12, neutrality);

    const SpectralField pf = project_galerkin(f, cfg.n / 4);
    const double ortho = std::abs(inner_product(f - pf, pf).real());
    report("projection-orthogonality",
           ortho <= 1e-12 * l2_norm(f) * l2_norm(f) && l2_norm(pf) <= l2_norm(f) + 1e-15, ortho);

    const SigmaFamily sigma = sigma_example(cfg.sigma_N, cfg.sigma_beta, cfg.nu);
    const auto q = covariance_origin(sigma);
    const double cov_err = std::max(
        std::max(std::abs(q[0][0] - cfg.nu), std::abs(q[1][1] - cfg.nu)),
        std::max(std::abs(q[0][1]), std::abs(q[1][0])));
    report("covariance-identity", cov_err < 1e-12, cov_err);

    // untruncated Parseval identity, and the truncated side can only drop
    const SpectralField fs = random_field(grid, cfg.seed + 7,
                                          cfg.n / 2 - 1 - (cfg.sigma_beta <= 1.0 ? cfg.sigma_N
                                                                                 : 2 * cfg.sigma_N),
                                          1.0);
    const double lhs = ito_correction_energy(fs, sigma);
    const double rhs = 2.0 * cfg.nu * hs_norm(fs, 1.0) * hs_norm(fs, 1.0);
    const double parseval_rel = std::abs(lhs - rhs) / rhs;
    WaveGrid cut_grid(cfg.n, cfg.n / 4);
    SpectralField fcut = fs;
    fcut.grid = cut_grid;
    fcut = project_galerkin(fcut, cfg.n / 4);
    const double lhs_cut = ito_correction_energy(fcut, sigma);
    const double rhs_cut = 2.0 * cfg.nu * hs_norm(fcut, 1.0) * hs_norm(fcut, 1.0);
    report("ito-parseval", parseval_rel < 1e-10 && lhs_cut <= rhs_cut * (1.0 + 1e-12),
           parseval_rel);

    BrownianDriver driver(cfg.seed, sigma);
    driver.sample_increments(1e-3);
    SpectralField fsmall = project_galerkin(fs, cfg.n / 4);
    const SpectralField nt = noise_term(fsmall, sigma, driver);
    report("noise-reality", nt.reality_defect() <= 1e-13, nt.reality_defect());

    // <e_k . grad f, f> = 0: single-mode increments, one k at a time
    double neutral_worst = 0.0;
    const auto active = driver.active_modes();
    for (std::size_t a = 0; a < active.size(); ++a) {
        std::vector<complexd> unit(active.size(), complexd{0.0, 0.0});
        unit[a] = complexd{1.0, 0.0};
        const SpectralField single = noise_term(fsmall, sigma, active, unit);
        neutral_worst =
            std::max(neutral_worst, std::abs(inner_product(single, fsmall).real()));
    }
    report("noise-energy-neutrality",
           neutral_worst <= 1e-12 * std::max(1.0, l2_norm(fsmall) * l2_norm(fsmall)),
           neutral_worst);

    bool decay_ok = true;
    double worst_ratio_step = 0.0;
    for (double beta : {0.0, 0.5, 2.0}) {
        double prev = 0.0;
        for (int N = 1; N <= 64; ++N) {
            const double r = noise_ratio(sigma_example(N, beta, cfg.nu));
            if (N > 1) worst_ratio_step = std::max(worst_ratio_step, r - prev);
            if (N > 1 && r > prev * 1.02) decay_ok = false;
            prev = r;
        }
        if (!(prev < 0.2 * noise_ratio(sigma_example(1, beta, cfg.nu)))) decay_ok = false;
    }
    report("noise-ratio-decay", decay_ok, worst_ratio_step);

    return all_pass ? 0 : 2;
}

inline int dispatch(const std::string& subcommand, const RunConfig& cfg, std::ostream& out) {
    if (subcommand == "simulate-det") return exec_simulate_det(cfg, out);
    if (subcommand == "simulate-sde") return exec_simulate_sde(cfg, out);
    if (subcommand == "scaling-limit") return exec_scaling_limit(cfg, out);
    if (subcommand == "covariance") return exec_covariance(cfg, out);
    if (subcommand == "check-invariants") return exec_check_invariants(cfg, out);
    throw std::invalid_argument("unknown subcommand in metadata: " + subcommand);
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"bq2d: stochastic 2D Boussinesq simulation laboratory"};
    app.set_version_flag("--version", std::string(version_string));
    app.set_config("--config", "", "read options from an INI/TOML file (flags override)");
    app.require_subcommand(1);

    RunConfig cfg;
    std::string metadata_path;

    auto add_sim_options = [&](CLI::App* sub, bool stochastic) {
        sub->add_option("--kappa", cfg.kappa, "thermal diffusivity (> 0)");
        sub->add_option("--nu", cfg.nu, "noise intensity / enhanced viscosity (> 0)");
        sub->add_option("-T,--horizon", cfg.T, "time horizon");
        sub->add_option("--dt", cfg.dt, "time step (T must be a multiple)");
        sub->add_option("--n", cfg.n, "grid points per axis (even, >= 8)");
        sub->add_option("--record-stride", cfg.record_stride, "steps between snapshots");
        sub->add_option("--s-neg", cfg.s_neg, "negative Sobolev exponent for the H^- metric");
        sub->add_option("--eps-kernel", cfg.eps_kernel, "kernel exponent in (0,1]; 1 = Biot-Savart");
        sub->add_option("--preset", cfg.preset, "initial data: heat-mode | shear-mode | two-mode");
        sub->add_option("--ic-file", cfg.ic_file, "initial data from a .bq2d snapshot");
        if (stochastic) {
            sub->add_option("--galerkin-N", cfg.galerkin_N, "Galerkin cutoff (0 = n/3)");
            sub->add_option("--sigma-N", cfg.sigma_N, "noise family index N");
            sub->add_option("--sigma-beta", cfg.sigma_beta, "noise family exponent beta >= 0");
            sub->add_option("--seed", cfg.seed, "master seed");
        }
    };

    CLI::App* det = app.add_subcommand("simulate-det", "deterministic viscous Boussinesq run");
    add_sim_options(det, false);
    det->add_option("--out", cfg.out_dir, "output directory")->required();

    CLI::App* sde = app.add_subcommand("simulate-sde", "stochastic Galerkin Boussinesq run");
    add_sim_options(sde, true);
    sde->add_flag("--zero-noise", cfg.zero_noise, "debug: drop the martingale term");
    sde->add_option("--out", cfg.out_dir, "output directory")->required();

    CLI::App* sl = app.add_subcommand("scaling-limit", "ensemble study over the noise family index");
    add_sim_options(sl, true);
    sl->add_option("--N-list", cfg.N_list, "noise family indices")->delimiter(',');
    sl->add_option("--M", cfg.M, "ensemble size per N");
    sl->add_option("--epsilon", cfg.epsilon, "exceedance threshold (<= 0: 2 x no-noise gap)");
    sl->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    sl->add_option("--out", cfg.out_dir, "output directory")->required();

    CLI::App* cov = app.add_subcommand("covariance", "print Q(x,x) for sigma_example(N, beta)");
    cov->add_option("--N", cfg.sigma_N, "family index N >= 1");
    cov->add_option("--beta", cfg.sigma_beta, "family exponent beta >= 0");
    cov->add_option("--nu", cfg.nu, "noise intensity");

    CLI::App* chk = app.add_subcommand("check-invariants", "run module invariant checks");
    chk->add_option("--n", cfg.n, "grid points per axis");
    chk->add_option("--seed", cfg.seed, "seed for the random instances");
    chk->add_option("--sigma-N", cfg.sigma_N, "noise family index N");
    chk->add_option("--sigma-beta", cfg.sigma_beta, "noise family exponent");
    chk->add_option("--nu", cfg.nu, "noise intensity");

    CLI::App* rerun = app.add_subcommand("rerun", "re-execute a command from metadata.json");
    rerun->add_option("--metadata", metadata_path, "path to metadata.json")->required();
    std::string rerun_out;
    rerun->add_option("--out", rerun_out, "override the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (rerun->parsed()) {
            const nlohmann::json meta = read_metadata(metadata_path);
            RunConfig stored = meta.at("options").get<RunConfig>();
            if (!rerun_out.empty()) stored.out_dir = rerun_out;
            return cli_detail::dispatch(meta.at("subcommand").get<std::string>(), stored, out);
        }
        if (det->parsed()) return cli_detail::exec_simulate_det(cfg, out);
        if (sde->parsed()) return cli_detail::exec_simulate_sde(cfg, out);
        if (sl->parsed()) return cli_detail::exec_scaling_limit(cfg, out);
        if (cov->parsed()) return cli_detail::exec_covariance(cfg, out);
        if (chk->parsed()) return cli_detail::exec_check_invariants(cfg, out);
        err << "error: no subcommand given\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace bq2d
