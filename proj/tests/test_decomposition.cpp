#include "imk/decomposition.hpp"
#include "imk/errors.hpp"
#include "imk/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace imk;

namespace {

struct Fixture {
    std::shared_ptr<const PhaseSpace> space;
    Decomposition dec;
};

const Fixture& gray_1d() {
    static const Fixture f = [] {
        Fixture out;
        out.space = std::make_shared<PhaseSpace>(gp_phase_space(test::gray_profile(128)));
        out.dec = decompose(out.space);
        return out;
    }();
    return f;
}

/// Gray soliton extended along a transverse axis long enough for the snake instability.
const Fixture& gray_2d() {
    static const Fixture f = [] {
        const WaveProfile& p = test::gray_profile(96);
        Grid g({96, 8}, {p.U.grid.lengths[0], 4.0 * 3.14159265358979});
        Vec c = Vec::Zero(2);
        c[0] = 0.5;
        Fixture out;
        out.space = std::make_shared<PhaseSpace>(gp_phase_space(test::raw_profile(extend_profile(p.U, g), c)));
        out.dec = decompose(out.space);
        return out;
    }();
    return f;
}

const Fixture& planted() {
    static const Fixture f = [] {
        Fixture out;
        out.space = std::make_shared<PhaseSpace>(planted_phase_space(0.7, {1.0, 2.3}));
        out.dec = decompose(out.space);
        return out;
    }();
    return f;
}

Vec random_state(const Fixture& f, std::mt19937_64& rng) {
    if (f.space->grid) return stack(test::random_smooth_field(*f.space->grid, rng, 1.0, 0.3));
    std::normal_distribution<double> n01;
    Vec v(f.space->dim);
    for (auto& x : v) x = n01(rng);
    return v;
}

Vec shift_of(const Fixture& f, double a, double b = 0.0) {
    const int k = f.space->grid ? f.space->grid->spatial_dim() : 1;
    Vec y = Vec::Zero(k);
    y[0] = a;
    if (k > 1) y[1] = b;
    return y;
}

double sup(const Mat& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

const std::vector<const Fixture*> all() { return {&planted(), &gray_1d(), &gray_2d()}; }

}  // namespace

TEST(Decompose, PlantedSpectrum) {
    const Decomposition& d = planted().dec;
    EXPECT_EQ(d.d, 1);
    EXPECT_EQ(d.d1, 0);
    EXPECT_EQ(d.d2, 0);
    EXPECT_EQ(d.n_minus, 1);
    EXPECT_EQ(d.dim_ker, 1);
    EXPECT_NEAR(d.lambda, 0.7, 1e-12);
    EXPECT_NEAR(d.M(Block::Minus, Block::Minus)(0, 0), -0.7, 1e-12);
    EXPECT_TRUE(d.index_consistent);
}

TEST(Decompose, GraySolitonIsSpectrallyStable) {
    const Decomposition& d = gray_1d().dec;
    EXPECT_EQ(d.d, 0);
    for (const auto& e : d.spectrum) EXPECT_LE(e.value.real(), 1e-6);
    EXPECT_TRUE(d.index_consistent);
    EXPECT_EQ(d.d1, d.n_minus + d.dim_ker - d.translations - d.d);
    // phase rotation joins the translation in the kernel on the torus
    EXPECT_EQ(d.dim_ker, 2);
    EXPECT_EQ(d.translations, 1);
}

TEST(Decompose, TransverseInstability) {
    const Decomposition& d = gray_2d().dec;
    EXPECT_GE(d.d, 1);
    EXPECT_GT(d.lambda, 0.05);
    EXPECT_TRUE(d.index_consistent);
    const GenEig p = general_eigen(d.M(Block::Plus, Block::Plus));
    const GenEig m = general_eigen(d.M(Block::Minus, Block::Minus));
    std::vector<double> rp, rm;
    for (Eigen::Index i = 0; i < p.values.size(); ++i) {
        EXPECT_GT(p.values[i].real(), 0.0);
        rp.push_back(p.values[i].real());
        rm.push_back(-m.values[i].real());
    }
    std::sort(rp.begin(), rp.end());
    std::sort(rm.begin(), rm.end());
    for (std::size_t i = 0; i < rp.size(); ++i) EXPECT_NEAR(rp[i], rm[i], 1e-6);
}

TEST(Decompose, Biorthogonality) {
    for (const Fixture* f : all()) {
        const Mat G = f->space->weight * f->dec.Z.transpose() * f->dec.V;
        EXPECT_LT(sup(G - Mat::Identity(G.rows(), G.cols())), 1e-8);
    }
}

TEST(Decompose, ProjectionAlgebra) {
    const std::vector<Block> blocks{Block::T, Block::D1, Block::D2, Block::Plus, Block::Minus, Block::E};
    for (const Fixture* f : all()) {
        std::mt19937_64 rng(31);
        const Vec y = shift_of(*f, 0.83, -1.7);
        for (int trial = 0; trial < 5; ++trial) {
            const Vec w = random_state(*f, rng);
            const double scale = std::max(1.0, sup(w));
            Vec sum = Vec::Zero(w.size());
            for (Block a : blocks) {
                const Vec pa = f->dec.project(y, a, w);
                sum += pa;
                for (Block b : blocks) {
                    const Vec pbpa = f->dec.project(y, b, pa);
                    if (a == b) EXPECT_LT(sup(pbpa - pa), 1e-8 * scale);
                    else EXPECT_LT(sup(pbpa), 1e-8 * scale);
                }
            }
            EXPECT_LT(sup(sum - w), 1e-8 * scale);
        }
    }
}

TEST(Decompose, BasisVectorsHaveUnitCoefficients) {
    const Decomposition& d = gray_2d().dec;
    const Vec y = shift_of(gray_2d(), -2.2, 0.9);
    const Mat Vy = d.basis_at(y, Block::Plus);
    for (Eigen::Index j = 0; j < Vy.cols(); ++j) {
        const Vec c = d.coefficients(y, Block::Plus, Vy.col(j));
        EXPECT_LT(sup(c - Vec::Unit(Vy.cols(), j)), 1e-8);
    }
}

TEST(Decompose, TranslationEquivariance) {
    for (const Fixture* f : {&gray_1d(), &gray_2d()}) {
        const PhaseSpace& ps = *f->space;
        std::mt19937_64 rng(32);
        const Vec y = shift_of(*f, 1.1, 0.4), z = shift_of(*f, -0.37, 2.05);
        for (int trial = 0; trial < 3; ++trial) {
            const Vec w = random_state(*f, rng);
            for (Block b : {Block::T, Block::D1, Block::Plus, Block::E}) {
                const Vec lhs = f->dec.project(y + z, b, w);
                const Vec rhs = ps.translate(f->dec.project(y, b, ps.translate(w, -z)), z);
                EXPECT_LT(sup(lhs - rhs), 1e-8 * std::max(1.0, sup(w)));
            }
        }
    }
}

TEST(Decompose, ProjectionDerivative) {
    for (const Fixture* f : {&gray_1d(), &gray_2d()}) {
        std::mt19937_64 rng(33);
        const Vec y = shift_of(*f, 0.6, -0.2), z = shift_of(*f, 0.8, 0.5);
        const Vec w = random_state(*f, rng);
        const double h = 1e-4;
        for (Block b : {Block::T, Block::D1, Block::Plus, Block::E}) {
            const Vec fd = (f->dec.project(y + h * z, b, w) - f->dec.project(y - h * z, b, w)) / (2 * h);
            const Vec an = f->dec.d_project(y, b, z, w);
            EXPECT_LT(sup(fd - an), 1e-6 * std::max(1.0, sup(an)));
            EXPECT_EQ(sup(f->dec.d_project(y, b, Vec::Zero(z.size()), w)), 0.0);
            // differentiate Pi^2 = Pi
            const Vec lhs = f->dec.d_project(y, b, z, f->dec.project(y, b, w)) +
                            f->dec.project(y, b, f->dec.d_project(y, b, z, w));
            EXPECT_LT(sup(lhs - an), 1e-7 * std::max(1.0, sup(an)));
        }
    }
}

TEST(Decompose, QuadraticFormBlockStructure) {
    for (const Fixture* f : all()) {
        const PhaseSpace& ps = *f->space;
        const Decomposition& d = f->dec;
        std::mt19937_64 rng(34);
        const Vec y = Vec::Zero(ps.grid ? ps.grid->spatial_dim() : 1);
        const Vec ve = d.project(y, Block::E, random_state(*f, rng));
        const Vec Lve = ps.L * ve;
        const double scale = std::sqrt(ps.pair(Lve, Lve));
        for (Eigen::Index j = 0; j < d.finite_size(); ++j)
            EXPECT_LT(std::abs(ps.pair(Lve, d.V.col(j))), 1e-7 * std::max(1.0, scale) * d.V.col(j).norm());
        // L vanishes on T and pairs + only with -
        for (Block a : {Block::T, Block::Plus, Block::Minus}) {
            const Mat Va = d.basis(a);
            const Mat LVa = ps.L * Va;
            if (a == Block::T) EXPECT_LT(sup(LVa), 1e-7 * f->dec.norm_JL * sup(Va));
            if (a != Block::T) EXPECT_LT(sup(ps.weight * Va.transpose() * LVa), 1e-7);
            if (a != Block::T) EXPECT_LT(sup(ps.weight * d.basis(Block::D1).transpose() * LVa), 1e-7);
        }
    }
}

TEST(Decompose, FibrePositivity) {
    for (const Fixture* f : all()) {
        const FibreModes m = lowest_fibre_modes(f->dec, 8);
        EXPECT_GT(m.values[0], 0.0);
        const PhaseSpace& ps = *f->space;
        for (Eigen::Index j = 0; j < m.modes.cols(); ++j) {
            const Vec v = m.modes.col(j);
            EXPECT_LT(sup(f->dec.project(Vec::Zero(ps.grid ? ps.grid->spatial_dim() : 1), Block::E, v) - v), 1e-8);
            double norm2 = std::pow(ps.x1_norm(v), 2);
            if (ps.grid) {
                const Eigen::Index h = v.size() / 2;
                norm2 += ps.weight * std::pow(v.tail(h).sum(), 2) / static_cast<double>(h);
            }
            EXPECT_NEAR(ps.pair(ps.L * v, v), m.values[j] * norm2, 1e-8 * m.values[j] + 1e-10);
        }
    }
}

TEST(Decompose, LongKernelChainIsRejected) {
    // q-coordinates (t, s), p-coordinates (pt, ps): JL s = t and <L s, s> = 0
    PhaseSpace ps;
    ps.dim = 4;
    ps.L = Mat::Zero(4, 4);
    ps.L(1, 2) = ps.L(2, 1) = 1.0;
    ps.L(3, 3) = 1.0;
    ps.J = Mat::Zero(4, 4);
    ps.J.topRightCorner(2, 2).setIdentity();
    ps.J.bottomLeftCorner(2, 2) = -Mat::Identity(2, 2);
    ps.translations = 1;
    ps.generators = Mat::Zero(4, 1);
    ps.generators(0, 0) = 1.0;
    ps.riesz = [](const Vec& v) { return v; };
    ps.translate = [](const Vec& v, const Vec&) { return v; };
    ps.derivative = [](const Vec& v, const Vec&) { return Vec::Zero(v.size()); };
    EXPECT_THROW(decompose(std::make_shared<PhaseSpace>(ps)), DegenerateSplitting);
}

TEST(Decompose, DenseCap) {
    Grid g({64, 64}, {10.0, 10.0});
    EXPECT_THROW(gp_phase_space(test::raw_profile(Field::constant(g, 1.0), Vec::Zero(2)), 4096), ShapeError);
}
