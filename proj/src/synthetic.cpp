#include "imk/synthetic.hpp"

#include "imk/errors.hpp"

#include <algorithm>

namespace imk {

PhaseSpace planted_phase_space(double lambda, const std::vector<double>& omegas) {
    if (!(lambda > 0.0)) throw ParameterError("planted rate must be positive");
    const Eigen::Index pairs = 2 + static_cast<Eigen::Index>(omegas.size());
    const Eigen::Index n = 2 * pairs;
    PhaseSpace ps;
    ps.dim = n;
    ps.weight = 1.0;
    ps.L = Mat::Zero(n, n);
    ps.L(0, pairs) = ps.L(pairs, 0) = lambda;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const auto q = static_cast<Eigen::Index>(1 + i);
        if (!(omegas[i] > 0.0)) throw ParameterError("oscillator frequencies must be positive");
        ps.L(q, q) = ps.L(q + pairs, q + pairs) = omegas[i];
    }
    const Eigen::Index qt = pairs - 1;
    ps.L(qt + pairs, qt + pairs) = 1.0;
    ps.J = Mat::Zero(n, n);
    ps.J.topRightCorner(pairs, pairs).setIdentity();
    ps.J.bottomLeftCorner(pairs, pairs) = -Mat::Identity(pairs, pairs);
    ps.translations = 1;
    ps.generators = Mat::Zero(n, 1);
    ps.generators(qt, 0) = 1.0;
    ps.riesz = [](const Vec& v) { return v; };
    ps.translate = [](const Vec& v, const Vec&) { return v; };
    ps.derivative = [](const Vec& v, const Vec&) { return Vec::Zero(v.size()); };
    return ps;
}

}  // namespace imk

namespace imk {

ToySystem::ToySystem(int k, int d, double lambda, Mat A, Remainder N, Scalar energy, Scalar quadratic)
    : lambda_(lambda), A_(std::move(A)), N_(std::move(N)), energy_(std::move(energy)), quadratic_(std::move(quadratic)) {
    if (!(lambda > 0.0)) throw ParameterError("toy rate must be positive");
    if (A_.rows() != A_.cols()) throw ShapeError("fibre matrix must be square");
    dims_.k = k;
    dims_.d = d;
    dims_.fibre = A_.rows();
}

ToySystem ToySystem::quadratic(double lambda) {
    return ToySystem(1, 1, lambda, Mat::Zero(1, 1), [](const BundlePoint& W) {
        BundlePoint n = BundlePoint::zero(W.dims());
        n.a_minus[0] = W.a_plus[0] * W.a_plus[0];
        return n;
    });
}

ToySystem ToySystem::coupled(double lambda, double omega, double kappa) {
    Mat A(2, 2);
    A << 0.0, omega, -omega, 0.0;
    return ToySystem(1, 1, lambda, A, [kappa](const BundlePoint& W) {
        const double p = W.a_plus[0], m = W.a_minus[0], v1 = W.V[0], v2 = W.V[1];
        BundlePoint n = BundlePoint::zero(W.dims());
        n.y[0] = kappa * (p * m + v1 * v1);
        n.a_plus[0] = kappa * (m * m + m * v2);
        n.a_minus[0] = kappa * (p * p + p * v1);
        n.V[0] = kappa * p * m;
        n.V[1] = kappa * (p * p - m * m + v1 * v2);
        return n;
    });
}

ToySystem ToySystem::hamiltonian(double lambda, double omega, double kappa) {
    Mat A(2, 2);
    A << 0.0, omega, -omega, 0.0;
    // K = p^2 v1 + m^2 v2 + v1^3 / 3 + p m v2 + p v1^2 + m v2^2
    auto remainder = [kappa](const BundlePoint& W) {
        const double p = W.a_plus[0], m = W.a_minus[0], v1 = W.V[0], v2 = W.V[1];
        BundlePoint n = BundlePoint::zero(W.dims());
        n.y[0] = p * m + v1 * v1;
        n.a_plus[0] = kappa * (2.0 * m * v2 + p * v2 + v2 * v2);        // dK/dm
        n.a_minus[0] = -kappa * (2.0 * p * v1 + m * v2 + v1 * v1);      // -dK/dp
        n.V[0] = kappa * (m * m + p * m + 2.0 * m * v2);                 // dK/dv2
        n.V[1] = -kappa * (p * p + v1 * v1 + 2.0 * p * v1);              // -dK/dv1
        return n;
    };
    auto energy = [lambda, omega, kappa](const BundlePoint& W) {
        const double p = W.a_plus[0], m = W.a_minus[0], v1 = W.V[0], v2 = W.V[1];
        const double K = p * p * v1 + m * m * v2 + v1 * v1 * v1 / 3.0 + p * m * v2 + p * v1 * v1 + m * v2 * v2;
        return 2.0 * (lambda * p * m + 0.5 * omega * (v1 * v1 + v2 * v2) + kappa * K);
    };
    auto quadratic = [lambda, omega](const BundlePoint& W) {
        return omega * W.V.squaredNorm() + 2.0 * lambda * W.a_minus.dot(W.a_plus);
    };
    return ToySystem(1, 1, lambda, A, remainder, energy, quadratic);
}

ToySystem ToySystem::reversed() const {
    const Remainder N = N_;
    auto swap = [](const BundlePoint& W) {
        BundlePoint s = W;
        std::swap(s.a_plus, s.a_minus);
        return s;
    };
    Remainder rev = [N, swap](const BundlePoint& W) {
        BundlePoint n = swap(N(swap(W)));
        return BundlePoint((-1.0) * n);
    };
    Scalar e, q;
    if (energy_) e = [f = energy_, swap](const BundlePoint& W) { return f(swap(W)); };
    if (quadratic_) q = [f = quadratic_, swap](const BundlePoint& W) { return f(swap(W)); };
    return ToySystem(dims_.k, dims_.d, lambda_, Mat(-A_), rev, e, q);
}

BundlePoint ToySystem::full_rhs(const BundlePoint& W) const {
    BundlePoint out = N_(W);
    out.a_plus += lambda_ * W.a_plus;
    out.a_minus -= lambda_ * W.a_minus;
    out.V += A_ * W.V;
    return out;
}

Mat ToySystem::block_matrix(Block b) const {
    switch (b) {
        case Block::Plus: return lambda_ * Mat::Identity(dims_.d, dims_.d);
        case Block::Minus: return -lambda_ * Mat::Identity(dims_.d, dims_.d);
        case Block::E: return A_;
        default: return Mat::Zero(0, 0);
    }
}

BundlePoint ToySystem::cutoff_rhs(const BundlePoint& W, const CutoffParams& params) const {
    const double gam = cutoff_gamma(3.0 * transverse_size(W, W.V.norm()) / params.delta);
    BundlePoint out = BundlePoint::zero(dims_);
    out.a_plus = lambda_ * W.a_plus;
    out.a_minus = -lambda_ * W.a_minus;
    out.V = A_ * W.V;
    if (gam == 0.0) return out;
    return out + gam * N_(W);
}

Mat ToySystem::fibre_directions(Eigen::Index m) const {
    return Mat::Identity(dims_.fibre, std::min<Eigen::Index>(m, dims_.fibre));
}

double ToySystem::energy_excess(const BundlePoint& W) const { return energy_ ? energy_(W) : 0.0; }
double ToySystem::energy_quadratic(const BundlePoint& W) const { return quadratic_ ? quadratic_(W) : 0.0; }

}  // namespace imk
