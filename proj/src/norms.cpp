#include "imk/norms.hpp"

#include "imk/errors.hpp"
#include "imk/fourier.hpp"

#include <cmath>
#include <limits>

namespace imk {

namespace {

Eigen::ArrayXd half_weights(const Fourier& F) {
    const int last = F.grid().spatial_dim() - 1;
    const auto& w = F.wavevectors();
    Eigen::ArrayXd out(F.spectrum_size());
    for (Eigen::Index s = 0; s < out.size(); ++s)
        out[s] = (w[s].k[last] == 0.0 || w[s].nyquist[last]) ? 1.0 : 2.0;
    return out;
}

double weighted_energy(const Fourier& F, const Eigen::ArrayXd& x, const Eigen::ArrayXd& symbol) {
    const CArray s = F.forward(x);
    const auto N = static_cast<double>(F.grid().size());
    return (half_weights(F) * symbol * s.abs2()).sum() * F.grid().cell_volume() / N;
}

void check_p(double p) {
    if (!(p >= 1.0)) throw ParameterError("norm exponent must lie in [1, inf]");
}

Eigen::ArrayXd modulus(const Field& f) { return (f.re.square() + f.im.square()).sqrt(); }

}  // namespace

double lp_norm(const Grid& g, const Eigen::ArrayXd& m, double p) {
    check_p(p);
    if (m.size() == 0) return 0.0;
    if (std::isinf(p)) return m.abs().maxCoeff();
    return std::pow((m.abs().pow(p)).sum() * g.cell_volume(), 1.0 / p);
}

Vec x1_riesz(const Grid& g, const Vec& a) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Vec out(a.size());
    out.head(n) = a.head(n) - laplacian(g, a.head(n).array()).matrix();
    out.tail(n) = -laplacian(g, a.tail(n).array()).matrix();
    return out;
}

double x1_inner(const Grid& g, const Vec& a, const Vec& b) { return inner(g, x1_riesz(g, a), b); }

double x1_norm(const Grid& g, const Vec& v) {
    auto F = fourier_for(g);
    const auto n = static_cast<Eigen::Index>(g.size());
    const double e1 = weighted_energy(*F, v.head(n).array(), 1.0 + F->k2());
    const double e2 = weighted_energy(*F, v.tail(n).array(), F->k2());
    return std::sqrt(std::max(0.0, e1 + e2));
}

double x1_norm(const Field& f) {
    auto F = fourier_for(f.grid);
    const double e1 = weighted_energy(*F, f.re, 1.0 + F->k2());
    const double e2 = weighted_energy(*F, f.im, F->k2());
    return std::sqrt(std::max(0.0, e1 + e2));
}

double l2_norm_spectral(const Field& f) {
    auto F = fourier_for(f.grid);
    const Eigen::ArrayXd one = Eigen::ArrayXd::Ones(F->spectrum_size());
    return std::sqrt(weighted_energy(*F, f.re, one) + weighted_energy(*F, f.im, one));
}

std::vector<BesovBlock> littlewood_paley(const Grid& g, const Eigen::ArrayXd& x, bool homogeneous) {
    auto F = fourier_for(g);
    const CArray s = F->forward(x);
    const Eigen::ArrayXd kabs = F->k2().sqrt();
    double kmin = std::numeric_limits<double>::infinity();
    double kmax = 0.0;
    for (Eigen::Index i = 0; i < kabs.size(); ++i) {
        if (kabs[i] > 0.0) kmin = std::min(kmin, kabs[i]);
        kmax = std::max(kmax, kabs[i]);
    }
    std::vector<BesovBlock> blocks;
    auto emit = [&](int j, auto&& member) {
        CArray part = CArray::Zero(s.size());
        bool any = false;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (member(kabs[i])) {
                part[i] = s[i];
                any = true;
            }
        if (any) blocks.push_back({j, F->backward(part)});
    };
    int jlo = 0;
    if (homogeneous) {
        if (!std::isfinite(kmin)) return blocks;
        jlo = static_cast<int>(std::floor(std::log2(kmin)));
    } else {
        emit(-1, [](double k) { return k < 1.0; });
    }
    const int jhi = kmax > 0.0 ? static_cast<int>(std::floor(std::log2(kmax))) : -1;
    for (int j = jlo; j <= jhi; ++j) {
        const double lo = std::ldexp(1.0, j), hi = std::ldexp(1.0, j + 1);
        emit(j, [lo, hi](double k) { return k >= lo && k < hi; });
    }
    return blocks;
}

double besov_norm(const Grid& g, const Eigen::ArrayXd& x, double p, double s, bool homogeneous) {
    check_p(p);
    double acc = 0.0;
    for (const auto& b : littlewood_paley(g, x, homogeneous)) {
        const double w = (b.j < 0 && !homogeneous) ? 1.0 : std::pow(2.0, s * b.j);
        const double v = w * lp_norm(g, b.part, p);
        acc += v * v;
    }
    return std::sqrt(acc);
}

double norm(const Field& f, const NormKind& kind) {
    const Grid& g = f.grid;
    switch (kind.tag) {
        case NormKind::Tag::X1:
            return x1_norm(f);
        case NormKind::Tag::L2:
            return lp_norm(g, modulus(f), 2.0);
        case NormKind::Tag::Lp:
            return lp_norm(g, modulus(f), kind.p);
        case NormKind::Tag::W1p: {
            check_p(kind.p);
            Eigen::ArrayXd grad2 = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(f.size()));
            for (int a = 0; a < g.spatial_dim(); ++a) {
                grad2 += derivative(g, f.re, a).square();
                grad2 += derivative(g, f.im, a).square();
            }
            return lp_norm(g, modulus(f), kind.p) + lp_norm(g, grad2.sqrt(), kind.p);
        }
        case NormKind::Tag::BesovBlock:
            return besov_norm(g, f.re, kind.p, kind.s, false) + besov_norm(g, f.im, kind.p, kind.s, true);
        case NormKind::Tag::Qweighted:
            if (!(kind.Q > 1.0)) throw ParameterError("Q-weighted norm needs Q > 1");
            return kind.Q * kind.Q * x1_norm(f);
    }
    return 0.0;
}

double q_norm(const Vec& y, const Vec& a_d1, const Vec& a_d2, const Vec& a_plus, double v_x1, double Q) {
    if (!(Q > 1.0)) throw ParameterError("Q-weighted norm needs Q > 1");
    return y.norm() + Q * a_d1.norm() + Q * Q * Q * a_d2.norm() + a_plus.norm() + Q * Q * v_x1;
}

SpacetimeNorm spacetime_norm(const std::vector<Field>& samples, double t0, double dt, double p, double q,
                             double eta, double pivot) {
    if (samples.empty()) throw DomainError("space-time norm of an empty sample list");
    check_p(p);
    check_p(q);
    SpacetimeNorm out;
    const double n = samples.front().grid.spatial_dim();
    const double lhs = (std::isinf(p) ? 0.0 : 2.0 / p) + (std::isinf(q) ? 0.0 : n / q);
    out.admissible = p >= 2.0 && q >= 2.0 && std::abs(lhs - n / 2.0) < 1e-12;

    std::vector<double> vals(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Field& f = samples[i];
        const double t = t0 + dt * static_cast<double>(i);
        const double spatial = besov_norm(f.grid, f.re, q, 1.0, false) + besov_norm(f.grid, f.im, q, 1.0, true);
        vals[i] = std::exp(eta * std::abs(pivot - t)) * spatial;
    }
    if (std::isinf(p)) {
        for (double v : vals) out.value = std::max(out.value, v);
        return out;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i)
        acc += 0.5 * dt * (std::pow(vals[i], p) + std::pow(vals[i + 1], p));
    out.value = std::pow(acc, 1.0 / p);
    return out;
}

}  // namespace imk
