// Fourier representation of zero-mean real scalar fields on the unit torus
// T^2 = R^2/Z^2 and the spectral operators built on it.
//
// Convention: f(x) = sum_k fhat_k e^{2 pi i k.x} with integer wavevectors k.
// A grid of n points per axis retains -n/2 < k1, k2 <= n/2. The k = 0 mode
// is structurally pinned to zero (all fields have zero average) and the
// Nyquist lines k_i = n/2, which have no conjugate partner in the retained
// set, are pinned to zero as well so that fields are exactly real.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace bq2d {

using complexd = std::complex<double>;

constexpr double two_pi = 6.283185307179586476925286766559;

struct Mode {
    int k1 = 0;
    int k2 = 0;

    friend bool operator==(const Mode&, const Mode&) = default;
    friend auto operator<=>(const Mode&, const Mode&) = default;

    int norm2() const { return k1 * k1 + k2 * k2; }
    double norm() const { return std::sqrt(static_cast<double>(norm2())); }
    Mode perp() const { return {-k2, k1}; }
    Mode operator-() const { return {-k1, -k2}; }
    Mode operator+(const Mode& o) const { return {k1 + o.k1, k2 + o.k2}; }
};

/// Grid of retained Fourier modes with the 2/3 dealias rule and an optional
/// Galerkin cutoff (retain 0 < |k| <= N, Euclidean norm).
struct WaveGrid {
    int n = 0;
    std::optional<int> galerkin_cutoff;

    WaveGrid() = default;
    explicit WaveGrid(int n_, std::optional<int> cutoff = std::nullopt)
        : n(n_), galerkin_cutoff(cutoff) {
        if (n < 8 || n % 2 != 0)
            throw std::invalid_argument("WaveGrid: n must be even and >= 8");
        if (cutoff) {
            if (*cutoff < 1)
                throw std::invalid_argument("WaveGrid: galerkin cutoff must be >= 1");
            if (n < 3 * *cutoff)
                throw std::invalid_argument(
                    "WaveGrid: n >= 3N required to resolve the cutoff without aliasing");
        }
    }

    std::size_t size() const { return static_cast<std::size_t>(n) * n; }

    // wavenumber of linear FFT index along one axis
    int wavenumber(int idx) const { return idx <= n / 2 ? idx : idx - n; }
    // linear FFT index of a wavenumber (wraparound)
    int index_of(int k) const { return k >= 0 ? k : k + n; }

    bool holds(const Mode& k) const {
        return -n / 2 < k.k1 && k.k1 <= n / 2 && -n / 2 < k.k2 && k.k2 <= n / 2;
    }
    // modes on the Nyquist lines have no retained conjugate partner
    bool nyquist(const Mode& k) const { return k.k1 == n / 2 || k.k2 == n / 2; }
    // true iff the mode survives the 2/3 rule: max(|k1|,|k2|) <= n/3
    bool dealias_keep(const Mode& k) const {
        return 3 * std::max(std::abs(k.k1), std::abs(k.k2)) <= n;
    }

    std::size_t flat(const Mode& k) const {
        return static_cast<std::size_t>(index_of(k.k1)) * n + index_of(k.k2);
    }
    Mode mode_at(std::size_t flat_idx) const {
        return {wavenumber(static_cast<int>(flat_idx) / n),
                wavenumber(static_cast<int>(flat_idx) % n)};
    }

    friend bool operator==(const WaveGrid&, const WaveGrid&) = default;
};

/// Complex Fourier coefficients of a real zero-mean scalar field.
struct SpectralField {
    WaveGrid grid;
    std::vector<complexd> coeffs;  // row-major, coeffs[i1*n + i2]

    SpectralField() = default;
    explicit SpectralField(const WaveGrid& g) : grid(g), coeffs(g.size(), complexd{0.0, 0.0}) {}

    complexd& at(const Mode& k) { return coeffs[grid.flat(k)]; }
    const complexd& at(const Mode& k) const { return coeffs[grid.flat(k)]; }

    /// Set the conjugate pair +-k; no-op target for k = 0. Rejects modes the
    /// grid cannot pair faithfully (outside the retained range or on the
    /// Nyquist lines, where the wraparound index would alias).
    void set_pair(const Mode& k, complexd v) {
        if (k == Mode{0, 0}) return;
        if (!grid.holds(k) || grid.nyquist(k))
            throw std::invalid_argument("set_pair: mode has no conjugate partner on this grid");
        at(k) = v;
        at(-k) = std::conj(v);
    }

    /// Pin k = 0 and the Nyquist lines to zero and average conjugate pairs,
    /// making the represented field exactly real with zero mean.
    void enforce_reality() {
        const int n = grid.n;
        coeffs[grid.flat({0, 0})] = complexd{0.0, 0.0};
        for (int i1 = 0; i1 < n; ++i1) {
            coeffs[grid.flat({grid.wavenumber(i1), n / 2})] = complexd{0.0, 0.0};
            coeffs[grid.flat({n / 2, grid.wavenumber(i1)})] = complexd{0.0, 0.0};
        }
        for (std::size_t idx = 0; idx < coeffs.size(); ++idx) {
            const Mode k = grid.mode_at(idx);
            if (k.k1 == n / 2 || k.k2 == n / 2) continue;
            const Mode mk = -k;
            if (k < mk) continue;  // touch each pair once (k = 0 already handled)
            const std::size_t j = grid.flat(mk);
            const complexd avg = 0.5 * (coeffs[idx] + std::conj(coeffs[j]));
            coeffs[idx] = avg;
            coeffs[j] = std::conj(avg);
        }
    }

    /// Largest Hermitian-symmetry / zero-mean violation, for assertions.
    double reality_defect() const {
        double worst = std::abs(coeffs[grid.flat({0, 0})]);
        for (std::size_t idx = 0; idx < coeffs.size(); ++idx) {
            const Mode k = grid.mode_at(idx);
            if (grid.nyquist(k)) {
                worst = std::max(worst, std::abs(coeffs[idx]));
                continue;
            }
            worst = std::max(worst, std::abs(coeffs[idx] - std::conj(at(-k))));
        }
        return worst;
    }

    SpectralField& operator+=(const SpectralField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
        return *this;
    }
    SpectralField& operator*=(double c) {
        for (auto& v : coeffs) v *= c;
        return *this;
    }
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double c, SpectralField a) { return a *= c; }

    // layout compatibility for arithmetic; the Galerkin tag may differ
    void require_same_grid(const SpectralField& o) const {
        if (grid.n != o.grid.n) throw std::invalid_argument("grid mismatch");
    }
};

/// L^2 inner product <f, g> = sum_k fhat_k conj(ghat_k); real part is the
/// usual pairing for real fields.
inline complexd inner_product(const SpectralField& f, const SpectralField& g) {
    f.require_same_grid(g);
    complexd s{0.0, 0.0};
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) s += f.coeffs[i] * std::conj(g.coeffs[i]);
    return s;
}

inline double l2_norm(const SpectralField& f) {
    double s = 0.0;
    for (const auto& c : f.coeffs) s += std::norm(c);
    return std::sqrt(s);
}

/// Sobolev norm |f|_{H^s}^2 = sum_{k != 0} (2 pi |k|)^{2s} |fhat_k|^2.
/// Well defined for any real s since fields are zero-mean; s = 0 is the L^2
/// norm and s = 1 equals |grad f|_{L^2}.
inline double hs_norm(const SpectralField& f, double s) {
    if (s == 0.0) return l2_norm(f);
    double total = 0.0;
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        const double a = std::norm(f.coeffs[i]);
        if (a == 0.0) continue;
        const Mode k = f.grid.mode_at(i);
        if (k.norm2() == 0) continue;
        total += std::pow(two_pi * two_pi * static_cast<double>(k.norm2()), s) * a;
    }
    return std::sqrt(total);
}

/// Seeded random Hermitian field supported on max(|k1|,|k2|) <= box with
/// amplitudes |k|^{-decay}. The generator is a fixed 64-bit mix, so the same
/// seed gives the same field on every platform.
inline SpectralField random_field(const WaveGrid& grid, std::uint64_t seed, int box,
                                  double decay = 1.0) {
    SpectralField f(grid);
    std::uint64_t state = seed;
    auto next_unit = [&state] {  // uniform in [-1, 1)
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        std::uint64_t z = state;
        z ^= z >> 33;
        z *= 0xFF51AFD7ED558CCDULL;
        z ^= z >> 33;
        return static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
    };
    for (int k1 = -box; k1 <= box; ++k1)
        for (int k2 = -box; k2 <= box; ++k2) {
            const Mode k{k1, k2};
            if (k.norm2() == 0 || !grid.holds(k) || grid.nyquist(k)) continue;
            const double re = next_unit(), im = next_unit();
            if (k1 < 0 || (k1 == 0 && k2 < 0)) continue;  // one draw order, half written
            f.set_pair(k, std::pow(k.norm(), -decay) * complexd{re, im});
        }
    return f;
}

// ---------------------------------------------------------------------------
// FFT workspace. FFTW plan creation is not thread-safe, so it is serialized;
// plan execution on the workspace's own buffers is safe per instance. Use one
// workspace per thread.
// ---------------------------------------------------------------------------

class Fft {
  public:
    explicit Fft(int n) : n_(n) {
        buf_ = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
        if (!buf_) throw std::bad_alloc();
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("fftw plan creation failed");
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;
    ~Fft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }

    int n() const { return n_; }

    /// Spectral -> physical point values (real parts of the inverse DFT).
    void to_physical(const SpectralField& f, std::vector<double>& out) {
        const std::size_t m = f.grid.size();
        if (f.grid.n != n_) throw std::invalid_argument("grid mismatch");
        for (std::size_t i = 0; i < m; ++i) {
            buf_[i][0] = f.coeffs[i].real();
            buf_[i][1] = f.coeffs[i].imag();
        }
        fftw_execute(bwd_);
        out.resize(m);
        for (std::size_t i = 0; i < m; ++i) out[i] = buf_[i][0];
    }

    /// Physical point values -> spectral coefficients (normalized forward
    /// DFT), with reality and zero mean re-enforced on the output.
    void to_spectral(const std::vector<double>& in, SpectralField& f) {
        const std::size_t m = f.grid.size();
        if (f.grid.n != n_ || in.size() != m) throw std::invalid_argument("grid mismatch");
        for (std::size_t i = 0; i < m; ++i) {
            buf_[i][0] = in[i];
            buf_[i][1] = 0.0;
        }
        fftw_execute(fwd_);
        const double scale = 1.0 / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i)
            f.coeffs[i] = complexd{buf_[i][0] * scale, buf_[i][1] * scale};
        f.enforce_reality();
    }

  private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    int n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// Sample a real-valued function of (x1, x2) in [0,1)^2 onto the grid and
/// transform; used for analytic initial data and test oracles.
template <typename F>
SpectralField field_from_function(const WaveGrid& grid, Fft& fft, F&& fn) {
    const int n = grid.n;
    std::vector<double> phys(grid.size());
    for (int j1 = 0; j1 < n; ++j1)
        for (int j2 = 0; j2 < n; ++j2)
            phys[static_cast<std::size_t>(j1) * n + j2] =
                fn(static_cast<double>(j1) / n, static_cast<double>(j2) / n);
    SpectralField f(grid);
    fft.to_spectral(phys, f);
    return f;
}

// ---------------------------------------------------------------------------
// Multiplier operators
// ---------------------------------------------------------------------------

/// (d1 f, d2 f): coefficients 2 pi i k_j fhat_k.
inline std::pair<SpectralField, SpectralField> gradient(const SpectralField& f) {
    SpectralField d1(f.grid), d2(f.grid);
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        const Mode k = f.grid.mode_at(i);
        const complexd v = complexd{0.0, two_pi} * f.coeffs[i];
        d1.coeffs[i] = static_cast<double>(k.k1) * v;
        d2.coeffs[i] = static_cast<double>(k.k2) * v;
    }
    return {std::move(d1), std::move(d2)};
}

/// Laplacian: coefficients -4 pi^2 |k|^2 fhat_k.
inline SpectralField laplacian(const SpectralField& f) {
    SpectralField out(f.grid);
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        const Mode k = f.grid.mode_at(i);
        out.coeffs[i] = -two_pi * two_pi * static_cast<double>(k.norm2()) * f.coeffs[i];
    }
    return out;
}

/// Biot-Savart velocity u = K * omega:
/// uhat_k = -i kperp omegahat_k / (2 pi |k|^2), kperp = (-k2, k1).
/// Divergence-free exactly (k . uhat = 0) and curl recovers omega.
inline std::pair<SpectralField, SpectralField> biot_savart(const SpectralField& omega) {
    SpectralField u1(omega.grid), u2(omega.grid);
    for (std::size_t i = 0; i < omega.coeffs.size(); ++i) {
        const Mode k = omega.grid.mode_at(i);
        if (k.norm2() == 0) continue;
        const complexd w = omega.coeffs[i] / (two_pi * k.norm2());
        const Mode kp = k.perp();
        u1.coeffs[i] = complexd{0.0, -1.0} * static_cast<double>(kp.k1) * w;
        u2.coeffs[i] = complexd{0.0, -1.0} * static_cast<double>(kp.k2) * w;
    }
    return {std::move(u1), std::move(u2)};
}

/// Generalized kernel: uhat_k = -2 pi i kperp (2 pi |k|)^{-(1+eps)} omegahat_k.
/// eps = 1 coincides with biot_savart.
inline std::pair<SpectralField, SpectralField> biot_savart_eps(const SpectralField& omega,
                                                               double eps) {
    if (!(eps > 0.0) || eps > 1.0)
        throw std::invalid_argument("biot_savart_eps: eps must lie in (0, 1]");
    SpectralField u1(omega.grid), u2(omega.grid);
    for (std::size_t i = 0; i < omega.coeffs.size(); ++i) {
        const Mode k = omega.grid.mode_at(i);
        if (k.norm2() == 0) continue;
        const double mult = two_pi * std::pow(two_pi * k.norm(), -(1.0 + eps));
        const complexd w = mult * omega.coeffs[i];
        const Mode kp = k.perp();
        u1.coeffs[i] = complexd{0.0, -1.0} * static_cast<double>(kp.k1) * w;
        u2.coeffs[i] = complexd{0.0, -1.0} * static_cast<double>(kp.k2) * w;
    }
    return {std::move(u1), std::move(u2)};
}

/// Scalar curl of a velocity field: d1 u2 - d2 u1.
inline SpectralField perp_divergence(const SpectralField& u1, const SpectralField& u2) {
    u1.require_same_grid(u2);
    SpectralField out(u1.grid);
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
        const Mode k = out.grid.mode_at(i);
        out.coeffs[i] = complexd{0.0, two_pi} * (static_cast<double>(k.k1) * u2.coeffs[i] -
                                                 static_cast<double>(k.k2) * u1.coeffs[i]);
    }
    return out;
}

/// Orthogonal projection onto modes 0 < |k| <= N; idempotent.
inline SpectralField project_galerkin(const SpectralField& f, int cutoff) {
    if (cutoff < 1) throw std::invalid_argument("project_galerkin: N >= 1 required");
    SpectralField out = f;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
        const Mode k = out.grid.mode_at(i);
        if (k.norm2() > cutoff * cutoff || k.norm2() == 0) out.coeffs[i] = complexd{0.0, 0.0};
    }
    return out;
}

inline void apply_dealias_mask(SpectralField& f) {
    for (std::size_t i = 0; i < f.coeffs.size(); ++i)
        if (!f.grid.dealias_keep(f.grid.mode_at(i))) f.coeffs[i] = complexd{0.0, 0.0};
}

namespace detail {

/// Pseudo-spectral u . grad f with u already in physical space. Shared by
/// advect() and the time steppers, which reuse one velocity transform for
/// both transported fields.
inline SpectralField advect_physical(const std::vector<double>& u1_phys,
                                     const std::vector<double>& u2_phys,
                                     const SpectralField& f, Fft& fft,
                                     std::vector<double>& scratch_a,
                                     std::vector<double>& scratch_b) {
    auto [d1, d2] = gradient(f);
    fft.to_physical(d1, scratch_a);
    fft.to_physical(d2, scratch_b);
    for (std::size_t i = 0; i < scratch_a.size(); ++i)
        scratch_a[i] = u1_phys[i] * scratch_a[i] + u2_phys[i] * scratch_b[i];
    SpectralField out(f.grid);
    fft.to_spectral(scratch_a, out);
    apply_dealias_mask(out);
    return out;
}

}  // namespace detail

/// Dealiased pseudo-spectral advection u . grad f. The result has zero mean
/// (exactly pinned; analytically the mean vanishes for divergence-free u).
inline SpectralField advect(const SpectralField& u1, const SpectralField& u2,
                            const SpectralField& f, Fft& fft) {
    u1.require_same_grid(f);
    u2.require_same_grid(f);
    std::vector<double> u1p, u2p, sa, sb;
    fft.to_physical(u1, u1p);
    fft.to_physical(u2, u2p);
    return detail::advect_physical(u1p, u2p, f, fft, sa, sb);
}

}  // namespace bq2d
