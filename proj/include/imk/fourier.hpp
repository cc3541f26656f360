#pragma once

#include "imk/field.hpp"

#include <array>
#include <complex>
#include <functional>
#include <memory>

namespace imk {

using cplx = std::complex<double>;
using CArray = Eigen::ArrayXcd;

/// Wavevector of one half-spectrum slot. `nyquist[a]` marks the self-conjugate
/// Nyquist index along axis a.
struct Wavevector {
    std::array<double, 3> k{0.0, 0.0, 0.0};
    std::array<bool, 3> nyquist{false, false, false};
    double norm2() const { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }
};

/// Real-to-complex transforms on one grid with FFTW plans created once.
class Fourier {
public:
    explicit Fourier(const Grid& g);
    ~Fourier();
    Fourier(const Fourier&) = delete;
    Fourier& operator=(const Fourier&) = delete;

    const Grid& grid() const { return grid_; }
    Eigen::Index spectrum_size() const { return nspec_; }
    const std::vector<Wavevector>& wavevectors() const { return waves_; }

    CArray forward(const Eigen::ArrayXd& x) const;
    /// Normalised inverse, so backward(forward(x)) == x.
    Eigen::ArrayXd backward(const CArray& s) const;

    /// |k|^2 per slot.
    const Eigen::ArrayXd& k2() const { return k2_; }
    /// Component k_a per slot with Nyquist entries zeroed (first-derivative symbol).
    const Eigen::ArrayXd& kd(int axis) const { return kd_[axis]; }

    Eigen::ArrayXd apply(const Eigen::ArrayXd& x, const Eigen::ArrayXd& real_symbol) const;
    Eigen::ArrayXd apply(const Eigen::ArrayXd& x, const CArray& symbol) const;

    /// Phase factors for a shift f -> f(. + y); Nyquist slots use cos(k y).
    CArray shift_symbol(const double* y) const;
    /// Symbol of z . grad.
    CArray gradient_symbol(const double* z) const;

private:
    Grid grid_;
    Eigen::Index nspec_ = 0;
    std::vector<Wavevector> waves_;
    Eigen::ArrayXd k2_;
    std::array<Eigen::ArrayXd, 3> kd_;
    void* plan_fwd_ = nullptr;
    void* plan_bwd_ = nullptr;
};

/// Shared transform object for a grid (plans are cached per grid).
std::shared_ptr<const Fourier> fourier_for(const Grid& g);

using Symbol = std::function<double(const Wavevector&)>;

Field apply_multiplier(const Field& f, const Symbol& symbol);
Eigen::ArrayXd apply_multiplier(const Grid& g, const Eigen::ArrayXd& x, const Symbol& symbol);

/// f(. + y) by spectral phase shift; y has one entry per spatial axis.
Field translate(const Field& f, const Eigen::VectorXd& y);
Eigen::ArrayXd translate(const Grid& g, const Eigen::ArrayXd& x, const Eigen::VectorXd& y);

Field derivative(const Field& f, int axis);
Eigen::ArrayXd derivative(const Grid& g, const Eigen::ArrayXd& x, int axis);
/// z . grad f.
Field directional_derivative(const Field& f, const Eigen::VectorXd& z);
Eigen::ArrayXd directional_derivative(const Grid& g, const Eigen::ArrayXd& x, const Eigen::VectorXd& z);

Field laplacian(const Field& f);
Eigen::ArrayXd laplacian(const Grid& g, const Eigen::ArrayXd& x);

/// Removes the self-conjugate Nyquist modes, on whose complement lattice
/// translations form an exact group.
Eigen::ArrayXd drop_nyquist(const Grid& g, const Eigen::ArrayXd& x);
Field drop_nyquist(const Field& f);
/// Projects out modes with |k| above `fraction` of the smallest Nyquist wavenumber.
Eigen::ArrayXd band_limit(const Grid& g, const Eigen::ArrayXd& x, double fraction);

}  // namespace imk
