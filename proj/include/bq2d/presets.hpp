// Named analytic initial conditions, constructed directly in spectral space.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "bq2d/spectral.hpp"

namespace bq2d {

/// heat-mode:  theta = sin(2 pi x2), omega = 0 (pure decaying mode)
/// shear-mode: theta = 0, omega = sin(2 pi x1) (stationary shear profile)
/// two-mode:   both fields carry two interacting modes
inline std::pair<SpectralField, SpectralField> make_preset(const std::string& name,
                                                           const WaveGrid& grid) {
    SpectralField theta(grid), omega(grid);
    const complexd half{0.5, 0.0};
    const complexd sin_amp{0.0, -0.5};  // sin: coefficient -i/2 at +k
    if (name == "heat-mode") {
        theta.set_pair({0, 1}, sin_amp);
    } else if (name == "shear-mode") {
        omega.set_pair({1, 0}, sin_amp);
    } else if (name == "two-mode") {
        theta.set_pair({0, 1}, sin_amp);
        theta.set_pair({1, 1}, 0.5 * half);
        omega.set_pair({1, 0}, sin_amp);
        omega.set_pair({1, -1}, 0.5 * half);
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    return {std::move(theta), std::move(omega)};
}

}  // namespace bq2d
