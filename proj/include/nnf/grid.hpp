#pragma once

#include <cstddef>
#include <stdexcept>

#include "nnf/common.hpp"

namespace nnf {

/// Uniform periodic grid on [0, L)^3 with n points per axis.
///
/// Physical storage is x-fastest: index(ix,iy,iz) = (iz*n + iy)*n + ix.
/// Spectral storage is the conjugate-symmetric half-spectrum of a real
/// field (x-dimension halved): sindex(jx,iy,iz) = (iz*n + iy)*(n/2+1) + jx,
/// jx in [0, n/2]. Integer wave indices m live in {-n/2+1, ..., n/2};
/// physical wavenumbers are k = (2*pi/L) * m.
struct Grid {
    int n = 0;
    double box_length = 2.0 * pi;

    Grid() = default;
    Grid(int n_, double box_length_ = 2.0 * pi) : n(n_), box_length(box_length_) {
        if (n < 8 || n % 2 != 0)
            throw std::invalid_argument("Grid: n must be even and >= 8, got " + std::to_string(n));
        if (!(box_length > 0.0))
            throw std::invalid_argument("Grid: box_length must be positive");
    }

    bool operator==(const Grid& o) const { return n == o.n && box_length == o.box_length; }
    bool operator!=(const Grid& o) const { return !(*this == o); }

    int half_n() const { return n / 2 + 1; }
    std::size_t num_phys() const { return std::size_t(n) * n * n; }
    std::size_t num_spec() const { return std::size_t(n) * n * half_n(); }

    double dx() const { return box_length / n; }
    double k_scale() const { return 2.0 * pi / box_length; }

    /// Integer wave index for a full-range dimension (y, z).
    int wave_index(int i) const { return i <= n / 2 ? i : i - n; }

    /// Wavenumber used for norms, the Leray projector and the viscous
    /// semigroup; includes the Nyquist index +n/2.
    double wavenumber(int m) const { return k_scale() * m; }

    /// Wavenumber used when applying d/dx spectrally. The Nyquist mode is
    /// zeroed: an odd derivative of it has no consistent real counterpart.
    double deriv_wavenumber(int m) const {
        return (m == n / 2) ? 0.0 : k_scale() * m;
    }

    std::size_t phys_index(int ix, int iy, int iz) const {
        return (std::size_t(iz) * n + iy) * n + ix;
    }
    std::size_t spec_index(int jx, int iy, int iz) const {
        return (std::size_t(iz) * n + iy) * half_n() + jx;
    }

    double x(int i) const { return box_length * i / n; }

    /// Quadrature weight of one grid cell (trapezoidal rule on the torus).
    double cell_volume() const { return dx() * dx() * dx(); }

    /// Multiplicity of a stored half-spectrum mode when summing over the
    /// full spectrum (kx=0 and kx=n/2 planes are self-conjugate).
    double spec_weight(int jx) const { return (jx == 0 || jx == n / 2) ? 1.0 : 2.0; }
};

}  // namespace nnf
