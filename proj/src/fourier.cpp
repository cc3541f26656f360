#include "imk/fourier.hpp"

#include "imk/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace imk {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

Fourier::Fourier(const Grid& g) : grid_(g) {
    grid_.validate();
    const int d = g.spatial_dim();
    const int nlast = g.dims[d - 1] / 2 + 1;
    Eigen::Index outer = 1;
    for (int a = 0; a + 1 < d; ++a) outer *= g.dims[a];
    nspec_ = outer * nlast;

    waves_.resize(nspec_);
    k2_.resize(nspec_);
    for (auto& a : kd_) a = Eigen::ArrayXd::Zero(nspec_);
    for (Eigen::Index s = 0; s < nspec_; ++s) {
        Eigen::Index rem = s;
        Wavevector w;
        for (int a = d - 1; a >= 0; --a) {
            const int n = g.dims[a];
            const int len = (a == d - 1) ? nlast : n;
            const int i = static_cast<int>(rem % len);
            rem /= len;
            const int m = (i <= n / 2) ? i : i - n;
            w.k[a] = 2.0 * std::numbers::pi / g.lengths[a] * m;
            w.nyquist[a] = (i == n / 2);
        }
        waves_[s] = w;
        k2_[s] = w.norm2();
        for (int a = 0; a < d; ++a) kd_[a][s] = w.nyquist[a] ? 0.0 : w.k[a];
    }

    std::vector<int> n(g.dims.begin(), g.dims.end());
    std::vector<double> rbuf(g.size());
    std::vector<fftw_complex> cbuf(static_cast<std::size_t>(nspec_));
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_fwd_ = fftw_plan_dft_r2c(d, n.data(), rbuf.data(), cbuf.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_bwd_ = fftw_plan_dft_c2r(d, n.data(), cbuf.data(), rbuf.data(),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
}

Fourier::~Fourier() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

CArray Fourier::forward(const Eigen::ArrayXd& x) const {
    if (static_cast<std::size_t>(x.size()) != grid_.size()) throw ShapeError("array does not match grid");
    CArray out(nspec_);
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), const_cast<double*>(x.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

Eigen::ArrayXd Fourier::backward(const CArray& s) const {
    if (s.size() != nspec_) throw ShapeError("spectrum does not match grid");
    CArray tmp = s;
    Eigen::ArrayXd out(static_cast<Eigen::Index>(grid_.size()));
    fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_bwd_), reinterpret_cast<fftw_complex*>(tmp.data()),
                         out.data());
    out /= static_cast<double>(grid_.size());
    return out;
}

Eigen::ArrayXd Fourier::apply(const Eigen::ArrayXd& x, const Eigen::ArrayXd& real_symbol) const {
    CArray s = forward(x);
    s *= real_symbol.cast<cplx>();
    return backward(s);
}

Eigen::ArrayXd Fourier::apply(const Eigen::ArrayXd& x, const CArray& symbol) const {
    CArray s = forward(x);
    s *= symbol;
    return backward(s);
}

CArray Fourier::shift_symbol(const double* y) const {
    CArray out(nspec_);
    const int d = grid_.spatial_dim();
    for (Eigen::Index s = 0; s < nspec_; ++s) {
        cplx f(1.0, 0.0);
        const auto& w = waves_[s];
        for (int a = 0; a < d; ++a) {
            const double ph = w.k[a] * y[a];
            f *= w.nyquist[a] ? cplx(std::cos(ph), 0.0) : cplx(std::cos(ph), std::sin(ph));
        }
        out[s] = f;
    }
    return out;
}

CArray Fourier::gradient_symbol(const double* z) const {
    CArray out = CArray::Zero(nspec_);
    for (int a = 0; a < grid_.spatial_dim(); ++a)
        if (z[a] != 0.0) out += cplx(0.0, z[a]) * kd_[a].cast<cplx>();
    return out;
}

std::shared_ptr<const Fourier> fourier_for(const Grid& g) {
    static std::mutex m;
    static std::map<std::pair<std::vector<int>, std::vector<double>>, std::shared_ptr<const Fourier>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto key = std::make_pair(g.dims, g.lengths);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto f = std::make_shared<const Fourier>(g);
    cache.emplace(key, f);
    return f;
}

Eigen::ArrayXd apply_multiplier(const Grid& g, const Eigen::ArrayXd& x, const Symbol& symbol) {
    auto F = fourier_for(g);
    const auto& w = F->wavevectors();
    Eigen::ArrayXd sym(F->spectrum_size());
    for (Eigen::Index s = 0; s < sym.size(); ++s) {
        sym[s] = symbol(w[s]);
        if (!std::isfinite(sym[s])) throw ParameterError("multiplier symbol is not finite on the grid");
    }
    return F->apply(x, sym);
}

Field apply_multiplier(const Field& f, const Symbol& symbol) {
    return Field(f.grid, apply_multiplier(f.grid, f.re, symbol), apply_multiplier(f.grid, f.im, symbol));
}

namespace {
void check_vector(const Grid& g, const Eigen::VectorXd& y) {
    if (y.size() != g.spatial_dim()) throw ShapeError("displacement has wrong dimension");
}
}  // namespace

Eigen::ArrayXd translate(const Grid& g, const Eigen::ArrayXd& x, const Eigen::VectorXd& y) {
    check_vector(g, y);
    if (y.isZero(0.0)) return x;
    auto F = fourier_for(g);
    return F->apply(x, F->shift_symbol(y.data()));
}

Field translate(const Field& f, const Eigen::VectorXd& y) {
    check_vector(f.grid, y);
    if (y.isZero(0.0)) return f;
    auto F = fourier_for(f.grid);
    const CArray sym = F->shift_symbol(y.data());
    return Field(f.grid, F->apply(f.re, sym), F->apply(f.im, sym));
}

Eigen::ArrayXd derivative(const Grid& g, const Eigen::ArrayXd& x, int axis) {
    auto F = fourier_for(g);
    return F->apply(x, CArray(cplx(0.0, 1.0) * F->kd(axis).cast<cplx>()));
}

Field derivative(const Field& f, int axis) {
    return Field(f.grid, derivative(f.grid, f.re, axis), derivative(f.grid, f.im, axis));
}

Eigen::ArrayXd directional_derivative(const Grid& g, const Eigen::ArrayXd& x, const Eigen::VectorXd& z) {
    check_vector(g, z);
    auto F = fourier_for(g);
    return F->apply(x, F->gradient_symbol(z.data()));
}

Field directional_derivative(const Field& f, const Eigen::VectorXd& z) {
    check_vector(f.grid, z);
    auto F = fourier_for(f.grid);
    const CArray sym = F->gradient_symbol(z.data());
    return Field(f.grid, F->apply(f.re, sym), F->apply(f.im, sym));
}

Eigen::ArrayXd laplacian(const Grid& g, const Eigen::ArrayXd& x) {
    auto F = fourier_for(g);
    return F->apply(x, Eigen::ArrayXd(-F->k2()));
}

Field laplacian(const Field& f) {
    return Field(f.grid, laplacian(f.grid, f.re), laplacian(f.grid, f.im));
}

Eigen::ArrayXd band_limit(const Grid& g, const Eigen::ArrayXd& x, double fraction) {
    double kmax = 1e300;
    for (int a = 0; a < g.spatial_dim(); ++a)
        kmax = std::min(kmax, std::numbers::pi / g.spacing(a));
    const double cut = fraction * kmax;
    return apply_multiplier(g, x, [cut](const Wavevector& w) {
        for (int a = 0; a < 3; ++a)
            if (w.nyquist[a] || std::abs(w.k[a]) > cut) return 0.0;
        return 1.0;
    });
}

}  // namespace imk

namespace imk {

Eigen::ArrayXd drop_nyquist(const Grid& g, const Eigen::ArrayXd& x) {
    return apply_multiplier(g, x, [](const Wavevector& w) {
        return (w.nyquist[0] || w.nyquist[1] || w.nyquist[2]) ? 0.0 : 1.0;
    });
}

Field drop_nyquist(const Field& f) { return Field(f.grid, drop_nyquist(f.grid, f.re), drop_nyquist(f.grid, f.im)); }

}  // namespace imk
