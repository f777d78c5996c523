#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bq2d/cli.hpp"
#include "test_util.hpp"

using namespace bq2d;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

int run_cli(std::initializer_list<const char*> args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
    std::vector<const char*> argv{"bq2d"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    const int rc = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("bq2d_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// drop the trailing wall-time column from a table.csv body
std::string strip_wall_time(const std::string& csv) {
    std::istringstream is(csv);
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line)) {
        const auto pos = line.rfind(',');
        os << line.substr(0, pos) << "\n";
    }
    return os.str();
}

}  // namespace

TEST_CASE("covariance subcommand prints nu I within 1e-12", "[cli]") {
    std::string out;
    REQUIRE(run_cli({"covariance", "--N", "4", "--beta", "0.5", "--nu", "0.1"}, &out) == 0);
    std::istringstream is(out);
    double q11, q12, q21, q22;
    is >> q11 >> q12 >> q21 >> q22;
    REQUIRE(is.good());
    REQUIRE_THAT(q11, WithinAbs(0.1, 1e-12));
    REQUIRE_THAT(q22, WithinAbs(0.1, 1e-12));
    REQUIRE_THAT(q12, WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(q21, WithinAbs(0.0, 1e-12));
}

TEST_CASE("cli validation and exit codes", "[cli]") {
    std::string out, err;
    SECTION("missing required flag exits 1 with usage text") {
        REQUIRE(run_cli({"simulate-det", "--preset", "heat-mode"}, &out, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("--out"));
    }
    SECTION("unknown flag exits 1") {
        REQUIRE(run_cli({"covariance", "--bogus", "3"}, &out, &err) == 1);
    }
    SECTION("no subcommand exits 1") {
        REQUIRE(run_cli({}, &out, &err) == 1);
    }
    SECTION("help exits 0") {
        REQUIRE(run_cli({"--help"}, &out, &err) == 0);
    }
    SECTION("bad numeric domain exits 1") {
        const auto dir = fresh_dir("badnum");
        REQUIRE(run_cli({"simulate-det", "--kappa", "0", "--out", dir.string().c_str()}, &out,
                        &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("kappa"));
    }
    SECTION("unknown preset exits 1") {
        const auto dir = fresh_dir("badpreset");
        REQUIRE(run_cli({"simulate-det", "--preset", "nope", "--out", dir.string().c_str()},
                        &out, &err) == 1);
    }
}

TEST_CASE("simulate-det writes csv matching the analytic heat decay", "[cli]") {
    const auto dir = fresh_dir("det");
    std::string out;
    REQUIRE(run_cli({"simulate-det", "--preset", "heat-mode", "--kappa", "1", "--nu", "1", "-T",
                     "0.1", "--dt", "0.001", "--n", "32", "--out", dir.string().c_str()},
                    &out) == 0);

    const std::string csv = slurp(dir / "series.csv");
    REQUIRE(csv.rfind(series_csv_header, 0) == 0);  // golden header

    // final row: t = 0.1, theta_l2 = e^{-8 pi^2 0.1} / sqrt(2)
    std::istringstream is(csv);
    std::string line, last;
    std::getline(is, line);  // header
    while (std::getline(is, line))
        if (!line.empty()) last = line;
    std::replace(last.begin(), last.end(), ',', ' ');
    std::istringstream row(last);
    double t, th_l2, th_h1, om_l2, om_hn;
    row >> t >> th_l2 >> th_h1 >> om_l2 >> om_hn;
    REQUIRE_THAT(t, WithinAbs(0.1, 1e-12));
    const double expected = std::exp(-2.0 * two_pi * two_pi * 0.1) / std::sqrt(2.0);
    REQUIRE_THAT(th_l2, WithinRel(expected, 1e-4));
    REQUIRE(om_l2 == 0.0);

    REQUIRE(fs::exists(dir / "final_state.bq2d"));
    REQUIRE(fs::exists(dir / "metadata.json"));
    const auto meta = read_metadata(dir / "metadata.json");
    REQUIRE(meta.at("subcommand") == "simulate-det");
    REQUIRE(meta.at("version") == std::string(version_string));
    REQUIRE_THAT(meta.at("seed_derivation").get<std::string>(),
                 ContainsSubstring("splitmix64"));
}

TEST_CASE("rerun reproduces outputs byte for byte", "[cli]") {
    const auto dir_a = fresh_dir("rerun_a");
    const auto dir_b = fresh_dir("rerun_b");
    REQUIRE(run_cli({"simulate-sde", "--preset", "two-mode", "--n", "16", "--galerkin-N", "5",
                     "--sigma-N", "2", "-T", "0.02", "--dt", "0.001", "--seed", "777", "--out",
                     dir_a.string().c_str()}) == 0);
    REQUIRE(run_cli({"rerun", "--metadata", (dir_a / "metadata.json").string().c_str(), "--out",
                     dir_b.string().c_str()}) == 0);
    REQUIRE(slurp(dir_a / "series.csv") == slurp(dir_b / "series.csv"));
    REQUIRE(slurp(dir_a / "final_state.bq2d") == slurp(dir_b / "final_state.bq2d"));
}

TEST_CASE("snapshot round trip and validation", "[cli]") {
    WaveGrid grid(16);
    SpectralField theta = random_field(grid, 8, 5);
    SpectralField omega = random_field(grid, 9, 5);
    const auto dir = fresh_dir("snap");
    const fs::path path = dir / "state.bq2d";

    SECTION("write then read is exact") {
        write_snapshot(path, theta, omega);
        const auto [th, om] = read_snapshot(path);
        REQUIRE(th.coeffs == theta.coeffs);
        REQUIRE(om.coeffs == omega.coeffs);
    }
    SECTION("truncated file is rejected") {
        write_snapshot(path, theta, omega);
        std::string bytes = slurp(path);
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        os.close();
        REQUIRE_THROWS_WITH(read_snapshot(path), ContainsSubstring("truncated"));
    }
    SECTION("bad magic is rejected") {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << "NOPE rest of file";
        os.close();
        REQUIRE_THROWS_WITH(read_snapshot(path), ContainsSubstring("magic"));
    }
    SECTION("nonzero mean mode is rejected") {
        write_snapshot(path, theta, omega);
        std::string bytes = slurp(path);
        // hand-build a file whose first record is k = 0 with a nonzero value
        std::string bad = bytes.substr(0, 4 + 2 + 4);
        const std::uint32_t count = 1;
        for (int b = 0; b < 4; ++b) bad.push_back(static_cast<char>((count >> (8 * b)) & 0xFF));
        for (int rec = 0; rec < 2; ++rec) {
            for (int b = 0; b < 8; ++b) bad.push_back('\0');  // k1 = k2 = 0
            const double re = 1.0;
            std::uint64_t bits;
            std::memcpy(&bits, &re, 8);
            for (int b = 0; b < 8; ++b) bad.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
            for (int b = 0; b < 8; ++b) bad.push_back('\0');  // im = 0
        }
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(bad.data(), static_cast<std::streamsize>(bad.size()));
        os.close();
        REQUIRE_THROWS_WITH(read_snapshot(path), ContainsSubstring("zero-mean"));
    }
    SECTION("hermitian violation is rejected") {
        write_snapshot(path, theta, omega);
        std::string bytes = slurp(path);
        // flip one payload byte deep inside the first record's real part
        bytes[4 + 2 + 4 + 4 + 8 + 3] = static_cast<char>(bytes[4 + 2 + 4 + 4 + 8 + 3] ^ 0x5A);
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        os.close();
        REQUIRE_THROWS_WITH(read_snapshot(path), ContainsSubstring("Hermitian"));
    }
    SECTION("simulate-det accepts snapshot initial data and validates the grid") {
        write_snapshot(path, theta, omega);
        const auto dir2 = fresh_dir("snap_ic");
        REQUIRE(run_cli({"simulate-det", "--ic-file", path.string().c_str(), "--n", "16", "-T",
                         "0.01", "--dt", "0.001", "--out", dir2.string().c_str()}) == 0);
        std::string err;
        REQUIRE(run_cli({"simulate-det", "--ic-file", path.string().c_str(), "--n", "32", "-T",
                         "0.01", "--dt", "0.001", "--out", dir2.string().c_str()},
                        nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("grid"));
    }
}

TEST_CASE("scaling-limit cli writes a stable table", "[cli]") {
    const auto dir_a = fresh_dir("sl_a");
    const auto dir_b = fresh_dir("sl_b");
    REQUIRE(run_cli({"scaling-limit", "--preset", "two-mode", "--n", "32", "--galerkin-N", "10",
                     "--N-list", "1,2", "-T", "0.02", "--dt", "0.001", "--M", "4", "--seed",
                     "11", "--threads", "2", "--out", dir_a.string().c_str()}) == 0);
    REQUIRE(run_cli({"rerun", "--metadata", (dir_a / "metadata.json").string().c_str(), "--out",
                     dir_b.string().c_str()}) == 0);

    const std::string csv_a = slurp(dir_a / "table.csv");
    REQUIRE(csv_a.rfind(table_csv_header, 0) == 0);  // golden header
    REQUIRE(strip_wall_time(csv_a) == strip_wall_time(slurp(dir_b / "table.csv")));

    std::istringstream is(csv_a);
    std::string line;
    std::getline(is, line);
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 2);
}

TEST_CASE("zero-noise debug flag drops all randomness", "[cli]") {
    const auto dir_a = fresh_dir("zn_a");
    const auto dir_b = fresh_dir("zn_b");
    REQUIRE(run_cli({"simulate-sde", "--preset", "two-mode", "--n", "16", "--galerkin-N", "5",
                     "--sigma-N", "2", "-T", "0.02", "--dt", "0.001", "--seed", "1", "--zero-noise",
                     "--out", dir_a.string().c_str()}) == 0);
    REQUIRE(run_cli({"simulate-sde", "--preset", "two-mode", "--n", "16", "--galerkin-N", "5",
                     "--sigma-N", "2", "-T", "0.02", "--dt", "0.001", "--seed", "2", "--zero-noise",
                     "--out", dir_b.string().c_str()}) == 0);
    // different seeds, identical trajectories: the martingale part is gone
    REQUIRE(slurp(dir_a / "series.csv") == slurp(dir_b / "series.csv"));
}

TEST_CASE("cfl warning reaches the console without aborting", "[cli]") {
    WaveGrid grid(16);
    SpectralField theta(grid), omega(grid);
    omega.set_pair({1, 0}, complexd{0.0, -0.5 * 3000.0});  // max|u| ~ 3000/(2 pi)
    const auto dir = fresh_dir("cfl");
    const fs::path ic = dir / "violent.bq2d";
    write_snapshot(ic, theta, omega);
    std::string out;
    REQUIRE(run_cli({"simulate-det", "--ic-file", ic.string().c_str(), "--n", "16", "-T", "0.002",
                     "--dt", "0.001", "--out", dir.string().c_str()},
                    &out) == 0);
    REQUIRE_THAT(out, ContainsSubstring("CFL exceeded"));
}

TEST_CASE("check-invariants subcommand passes on sane configs", "[cli]") {
    std::string out;
    REQUIRE(run_cli({"check-invariants", "--n", "32", "--seed", "3", "--sigma-N", "2"}, &out) == 0);
    REQUIRE_THAT(out, ContainsSubstring("PASS covariance-identity"));
    REQUIRE(out.find("FAIL") == std::string::npos);
}

TEST_CASE("config file supplies defaults and flags override", "[cli]") {
    const auto dir = fresh_dir("cfg");
    const fs::path cfg = dir / "run.toml";
    {
        std::ofstream os(cfg);
        os << "[covariance]\nN = 2\nbeta = 0.0\nnu = 0.5\n";
    }
    std::string out;
    REQUIRE(run_cli({"--config", cfg.string().c_str(), "covariance"}, &out) == 0);
    std::istringstream is(out);
    double q11;
    is >> q11;
    REQUIRE_THAT(q11, WithinAbs(0.5, 1e-12));

    // flag wins over the file
    REQUIRE(run_cli({"--config", cfg.string().c_str(), "covariance", "--nu", "0.25"}, &out) == 0);
    std::istringstream is2(out);
    is2 >> q11;
    REQUIRE_THAT(q11, WithinAbs(0.25, 1e-12));
}
