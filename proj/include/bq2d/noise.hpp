// Transport-noise structure: sigma coefficient families on the integer
// lattice, the divergence-free fields e_k, complex Brownian increments with
// quadratic variation [W^k, W^{-k}]_t = 2t, and the spectral evaluation of
// the transported noise term.
//
// The lattice is split as Z^2_0 = Z^2_+ u Z^2_-, Z^2_+ = -Z^2_-, with the
// canonical choice Z^2_+ = {k1 > 0} u {k1 = 0, k2 > 0}. The fields are
// e_k(x) = e^{2 pi i k.x} (+-kperp/|k|), + on Z^2_+, - on Z^2_-, so that
// e_{-k} = conj(e_k) and W^{-k} = conj(W^k) make the noise real.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "bq2d/spectral.hpp"

namespace bq2d {

inline bool positive_cone(const Mode& k) { return k.k1 > 0 || (k.k1 == 0 && k.k2 > 0); }

/// splitmix64 finalizer; the fixed mixing function behind ensemble seed
/// derivation (child = split_seed(master, trajectory_index)).
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Noise coefficients {sigma_k} with intensity nu. Finitely many nonzero
/// entries, k = 0 excluded. Entries are kept sorted for deterministic
/// iteration order.
struct SigmaFamily {
    double nu = 0.0;
    std::vector<std::pair<Mode, double>> coeffs;
    double l2_norm = 0.0;
    double linf_norm = 0.0;

    SigmaFamily(double nu_, std::vector<std::pair<Mode, double>> entries) : nu(nu_) {
        if (!(nu > 0.0)) throw std::invalid_argument("SigmaFamily: nu > 0 required");
        for (const auto& [k, s] : entries) {
            if (k == Mode{0, 0})
                throw std::invalid_argument("SigmaFamily: k = 0 not allowed in support");
            if (s != 0.0) coeffs.emplace_back(k, s);
        }
        std::sort(coeffs.begin(), coeffs.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < coeffs.size(); ++i)
            if (coeffs[i].first == coeffs[i - 1].first)
                throw std::invalid_argument("SigmaFamily: duplicate mode in support");
        double sum2 = 0.0;
        for (const auto& [k, s] : coeffs) {
            sum2 += s * s;
            linf_norm = std::max(linf_norm, std::abs(s));
        }
        l2_norm = std::sqrt(sum2);
        if (!(l2_norm > 0.0)) throw std::invalid_argument("SigmaFamily: empty support");
    }

    /// sigma_k = sigma_l whenever |k| = |l| over the support, and support
    /// closed under k -> -k. Required for the covariance identity, but not
    /// enforced at construction (asymmetric families are legal inputs).
    bool is_symmetric() const {
        std::map<int, double> by_shell;
        std::map<int, int> count;
        for (const auto& [k, s] : coeffs) {
            auto [it, inserted] = by_shell.emplace(k.norm2(), s);
            if (!inserted && it->second != s) return false;
            ++count[k.norm2()];
        }
        // every shell must be fully populated (lattice-point count per shell)
        for (const auto& [n2, c] : count) {
            int lattice = 0;
            const int r = static_cast<int>(std::sqrt(static_cast<double>(n2))) + 1;
            for (int a = -r; a <= r; ++a)
                for (int b = -r; b <= r; ++b)
                    if (a * a + b * b == n2) ++lattice;
            if (c != lattice) return false;
        }
        return true;
    }

    std::vector<Mode> positive_cone_modes() const {
        std::vector<Mode> out;
        for (const auto& [k, s] : coeffs)
            if (positive_cone(k)) out.push_back(k);
        return out;
    }
};

/// The beta-indexed example family:
/// sigma^N_k = |k|^{-beta} 1{|k| <= N}        for beta in [0, 1],
/// sigma^N_k = |k|^{-beta} 1{N <= |k| <= 2N}  for beta > 1.
/// Symmetric by construction.
inline SigmaFamily sigma_example(int N, double beta, double nu) {
    if (N < 1) throw std::invalid_argument("sigma_example: N >= 1 required");
    if (beta < 0.0) throw std::invalid_argument("sigma_example: beta >= 0 required");
    std::vector<std::pair<Mode, double>> entries;
    const int lo2 = beta <= 1.0 ? 1 : N * N;
    const int hi2 = beta <= 1.0 ? N * N : 4 * N * N;
    const int box = beta <= 1.0 ? N : 2 * N;
    for (int k1 = -box; k1 <= box; ++k1)
        for (int k2 = -box; k2 <= box; ++k2) {
            const int n2 = k1 * k1 + k2 * k2;
            if (n2 < lo2 || n2 > hi2 || n2 == 0) continue;
            entries.push_back({Mode{k1, k2}, std::pow(std::sqrt(static_cast<double>(n2)), -beta)});
        }
    return SigmaFamily(nu, std::move(entries));
}

inline double noise_ratio(const SigmaFamily& sigma) { return sigma.linf_norm / sigma.l2_norm; }

/// Covariance of the noise at a point:
/// Q(x,x) = (2 nu / |sigma|_l2^2) sum_k sigma_k^2 (kperp x kperp) / |k|^2,
/// which equals nu I_2 exactly for symmetric families.
inline std::array<std::array<double, 2>, 2> covariance_origin(const SigmaFamily& sigma) {
    std::array<std::array<double, 2>, 2> q{{{0.0, 0.0}, {0.0, 0.0}}};
    for (const auto& [k, s] : sigma.coeffs) {
        const Mode kp = k.perp();
        const double w = s * s / static_cast<double>(k.norm2());
        q[0][0] += w * kp.k1 * kp.k1;
        q[0][1] += w * kp.k1 * kp.k2;
        q[1][0] += w * kp.k2 * kp.k1;
        q[1][1] += w * kp.k2 * kp.k2;
    }
    const double pref = 2.0 * sigma.nu / (sigma.l2_norm * sigma.l2_norm);
    for (auto& row : q)
        for (auto& v : row) v *= pref;
    return q;
}

/// Complex Brownian increments for the positive-cone modes of one family.
/// DW^k = sqrt(dt) (xi + i eta), xi, eta independent standard normals, so
/// E|DW^k|^2 = 2 dt and E[(DW^k)^2] = 0; DW^{-k} := conj(DW^k).
///
/// Identical seeds give bit-identical streams. Normals come from the
/// Marsaglia polar method on top of mt19937_64, so the stream is pinned by
/// the construction here rather than by any library distribution.
class BrownianDriver {
  public:
    BrownianDriver(std::uint64_t seed, const SigmaFamily& sigma, bool zero_noise = false)
        : seed_(seed),
          zero_noise_(zero_noise),
          engine_(splitmix64(seed)),
          active_(sigma.positive_cone_modes()),
          increments_(active_.size(), complexd{0.0, 0.0}) {}

    void sample_increments(double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("sample_increments: dt > 0 required");
        if (zero_noise_) return;  // debug mode: martingale part dropped
        const double root_dt = std::sqrt(dt);
        for (auto& w : increments_) {
            const auto [xi, eta] = normal_pair();
            w = complexd{root_dt * xi, root_dt * eta};
        }
    }

    const std::vector<Mode>& active_modes() const { return active_; }
    const std::vector<complexd>& increments() const { return increments_; }
    std::uint64_t seed() const { return seed_; }
    bool zero_noise() const { return zero_noise_; }

  private:
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    std::pair<double, double> normal_pair() {
        for (;;) {
            const double u = 2.0 * uniform01() - 1.0;
            const double v = 2.0 * uniform01() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                const double fac = std::sqrt(-2.0 * std::log(s) / s);
                return {u * fac, v * fac};
            }
        }
    }

    std::uint64_t seed_;
    bool zero_noise_;
    std::mt19937_64 engine_;
    std::vector<Mode> active_;
    std::vector<complexd> increments_;
};

/// Martingale increment of the transported field:
///   (sqrt(2 nu) / |sigma|_l2) sum_k sigma_k (e_k . grad f) DW^k
/// summed over the full support (both cones), evaluated by exact spectral
/// shifts: each positive-cone k sends mode m to m +- k with amplitude
/// 2 pi i (kperp . m / |k|) sigma_k fhat_m times DW^k (resp. conj(DW^k)).
/// Cost is O(|supp sigma| x nonzero modes); exactness is what the energy and
/// covariance checks lean on.
/// TODO: assemble the full noise field and use one FFT product instead when
/// sigma supports get large (hundreds of shells).
///
/// The output is Hermitian by construction (conjugate targets are written
/// pairwise). If the field's grid carries a Galerkin cutoff, the result is
/// post-projected onto 0 < |k| <= N; shifted modes the grid cannot hold
/// raise "galerkin overflow" regardless of the projection.
inline SpectralField noise_term(const SpectralField& f, const SigmaFamily& sigma,
                                const std::vector<Mode>& modes,
                                const std::vector<complexd>& increments) {
    if (modes.size() != increments.size())
        throw std::invalid_argument("noise_term: increment list does not match mode list");
    std::map<Mode, double> sigma_of;
    for (const auto& [k, s] : sigma.coeffs) sigma_of[k] = s;

    // nonzero source modes, one representative per conjugate pair
    std::vector<std::pair<Mode, complexd>> sources;
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        if (f.coeffs[i] == complexd{0.0, 0.0}) continue;
        const Mode m = f.grid.mode_at(i);
        if (!positive_cone(m)) continue;
        sources.emplace_back(m, f.coeffs[i]);
    }

    const double pref = std::sqrt(2.0 * sigma.nu) / sigma.l2_norm;
    SpectralField out(f.grid);
    for (std::size_t a = 0; a < modes.size(); ++a) {
        const Mode k = modes[a];
        if (!positive_cone(k))
            throw std::invalid_argument("noise_term: increment modes must lie in Z^2_+");
        const auto it = sigma_of.find(k);
        if (it == sigma_of.end())
            throw std::invalid_argument("noise_term: increment mode outside sigma support");
        const double coef = pref * it->second / k.norm();
        const complexd w = increments[a];
        const complexd wc = std::conj(w);
        const Mode kp = k.perp();
        for (const auto& [m, fm] : sources) {
            const double dot = static_cast<double>(kp.k1 * m.k1 + kp.k2 * m.k2);
            if (dot == 0.0) continue;
            const complexd g = complexd{0.0, two_pi * dot * coef} * fm;
            const Mode up = m + k;
            const Mode down = m + (-k);
            if (!f.grid.holds(up) || f.grid.nyquist(up) || !f.grid.holds(down) ||
                f.grid.nyquist(down))
                throw std::runtime_error(
                    "galerkin overflow: grid cannot represent shifted noise modes");
            const complexd cu = g * w;
            const complexd cd = g * wc;
            out.at(up) += cu;
            out.at(-up) += std::conj(cu);
            out.at(down) += cd;
            out.at(-down) += std::conj(cd);
        }
    }
    if (f.grid.galerkin_cutoff) return project_galerkin(out, *f.grid.galerkin_cutoff);
    return out;
}

inline SpectralField noise_term(const SpectralField& f, const SigmaFamily& sigma,
                                const BrownianDriver& driver) {
    return noise_term(f, sigma, driver.active_modes(), driver.increments());
}

/// Ito-correction energy (4 nu / |sigma|_l2^2) sum_k sigma_k^2 |P(e_k . grad f)|_L2^2,
/// P the Galerkin projection when the grid carries a cutoff. Without
/// truncation this equals 2 nu |grad f|_L2^2 (Parseval over the shell-averaged
/// covariance); with truncation it can only fall below that value.
inline double ito_correction_energy(const SpectralField& f, const SigmaFamily& sigma) {
    const std::optional<int> cutoff = f.grid.galerkin_cutoff;
    double total = 0.0;
    for (const auto& [k, s] : sigma.coeffs) {
        const Mode kp = k.perp();
        double norm2 = 0.0;
        for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
            const complexd fm = f.coeffs[i];
            if (fm == complexd{0.0, 0.0}) continue;
            const Mode m = f.grid.mode_at(i);
            if (cutoff) {
                const Mode shifted = m + k;
                if (shifted.norm2() > *cutoff * *cutoff || shifted.norm2() == 0) continue;
            }
            const double dot = static_cast<double>(kp.k1 * m.k1 + kp.k2 * m.k2);
            const double amp = two_pi * dot / k.norm();
            norm2 += amp * amp * std::norm(fm);
        }
        total += s * s * norm2;
    }
    return 4.0 * sigma.nu / (sigma.l2_norm * sigma.l2_norm) * total;
}

}  // namespace bq2d
