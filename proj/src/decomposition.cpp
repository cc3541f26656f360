#include "imk/decomposition.hpp"

#include "imk/errors.hpp"

#include <algorithm>
#include <cmath>

namespace imk {

const char* block_name(Block b) {
    switch (b) {
        case Block::T: return "T";
        case Block::D1: return "d1";
        case Block::D2: return "d2";
        case Block::Plus: return "+";
        case Block::Minus: return "-";
        case Block::E: return "e";
    }
    return "?";
}

namespace {

Mat hcat(const std::vector<Mat>& parts, Eigen::Index rows) {
    Eigen::Index cols = 0;
    for (const auto& p : parts) cols += p.cols();
    Mat out(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p;
        at += p.cols();
    }
    return out;
}

Mat apply_columns(const Mat& A, const std::function<Vec(const Vec&)>& f) {
    Mat out(A.rows(), A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) out.col(j) = f(A.col(j));
    return out;
}

/// Orthonormalise columns (span preserved); used for conditioning only.
Mat orthonormalize(const Mat& A) {
    if (A.cols() == 0) return A;
    Eigen::HouseholderQR<Mat> qr(A);
    return qr.householderQ() * Mat::Identity(A.rows(), A.cols());
}

double condition_number(const Mat& G) {
    if (G.rows() == 0) return 1.0;
    Eigen::JacobiSVD<Mat> svd(G);
    const auto& s = svd.singularValues();
    return s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : INFINITY;
}

}  // namespace

Decomposition decompose(std::shared_ptr<const PhaseSpace> space, const DecomposeOptions& opt) {
    const PhaseSpace& ps = *space;
    const Eigen::Index n = ps.dim;
    if (ps.L.rows() != n || ps.L.cols() != n || ps.J.rows() != n) throw ShapeError("phase space matrices have wrong size");

    Decomposition dec;
    dec.space = space;
    dec.translations = ps.translations;

    // Quadratic form: Morse index, kernel and pseudo-inverse.
    const SymEig le = symmetric_eigen(ps.L);
    const double normL = std::max(std::abs(le.values[0]), std::abs(le.values[n - 1]));
    const double ker_tol = opt.tol * std::max(1.0, normL);
    std::vector<Eigen::Index> ker_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (le.values[i] < -ker_tol) ++dec.n_minus;
        else if (std::abs(le.values[i]) <= ker_tol) ker_idx.push_back(i);
    }
    dec.dim_ker = static_cast<int>(ker_idx.size());
    Mat kernel(n, dec.dim_ker);
    for (int j = 0; j < dec.dim_ker; ++j) kernel.col(j) = le.vectors.col(ker_idx[static_cast<std::size_t>(j)]);
    Vec inv_values = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(le.values[i]) > ker_tol) inv_values[i] = 1.0 / le.values[i];
    auto pinv = [&](const Vec& b) -> Vec { return le.vectors * (inv_values.asDiagonal() * (le.vectors.transpose() * b)); };

    const Mat& T = ps.generators;
    if (T.cols() > dec.dim_ker)
        throw DegenerateSplitting("kernel of the Hessian is smaller than the translation family",
                                  ker_tol * 10.0);

    // Kernel directions X1-orthogonal to the translations.
    Mat RT = apply_columns(T, ps.riesz);
    Mat ytilde;
    {
        const Mat C = RT.transpose() * kernel;  // (T_i, K_j)_X1 / weight
        Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
        const Mat Vs = svd.matrixV();
        ytilde = kernel * Vs.rightCols(dec.dim_ker - T.cols());
    }
    const Mat kfull = hcat({T, ytilde}, n);
    const Mat Rk = apply_columns(kfull, ps.riesz);
    const Mat Gk = ps.weight * kfull.transpose() * Rk;
    const Eigen::LDLT<Mat> Gk_ldlt(Gk);

    auto to_mat = [n](const std::vector<Vec>& cols) {
        Mat m(n, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = cols[j];
        return m;
    };

    // Tails of kernel vectors: L w = -J v, solvable when -J v is orthogonal to the kernel.
    Mat negative_tails(n, 0);
    Eigen::Index chain_count = 0;
    {
        const Mat C = ps.weight * kfull.transpose() * (-ps.J * kfull);
        Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        const double scale = ps.weight * kfull.colwise().squaredNorm().maxCoeff();
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s[i] > opt.tol * scale) ++rank;
        const Mat null = svd.matrixV().rightCols(C.cols() - rank);
        chain_count = null.cols();
        Mat W(n, null.cols());
        for (Eigen::Index j = 0; j < null.cols(); ++j) {
            const Vec v = kfull * null.col(j);
            Vec w = pinv(-(ps.J * v));
            // remove the kernel component in X1
            w -= kfull * Gk_ldlt.solve(ps.weight * Rk.transpose() * w);
            W.col(j) = w;
        }
        if (W.cols() > 0) {
            Vec wn(W.cols());
            for (Eigen::Index j = 0; j < W.cols(); ++j) wn[j] = ps.x1_norm(W.col(j));
            const Mat Wn = W * wn.cwiseInverse().asDiagonal();
            const Mat S = ps.weight * Wn.transpose() * ps.L * Wn;
            const SymEig se = symmetric_eigen(0.5 * (S + S.transpose()));
            std::vector<Vec> neg;
            for (Eigen::Index i = 0; i < se.values.size(); ++i) {
                if (std::abs(se.values[i]) <= opt.chain_tol)
                    throw DegenerateSplitting("kernel chain of length three or more", std::abs(se.values[i]) * 0.5);
                if (se.values[i] < 0.0) neg.push_back(Wn * se.vectors.col(i));
            }
            negative_tails = to_mat(neg);
        }
    }

    // Spectrum of JL.
    const Mat JL = ps.J * ps.L;
    const GenEig ge = general_eigen(JL, true);
    double normJL = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) normJL = std::max(normJL, std::abs(ge.values[i]));
    dec.norm_JL = normJL;
    const double hyp_tol = opt.tol * std::max(1.0, normJL);

    // The generalized kernel has algebraic multiplicity dim_ker + chain_count;
    // those eigenvalues split under discretisation error, so they are
    // identified by magnitude rather than by threshold.
    std::vector<bool> in_kernel(static_cast<std::size_t>(n), false);
    {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::sort(order.begin(), order.end(),
                  [&](Eigen::Index x, Eigen::Index y) { return std::abs(ge.values[x]) < std::abs(ge.values[y]); });
        const auto m0 = static_cast<std::size_t>(dec.dim_ker + chain_count);
        for (std::size_t i = 0; i < m0 && i < order.size(); ++i) in_kernel[static_cast<std::size_t>(order[i])] = true;
        if (m0 < order.size() && std::abs(ge.values[order[m0]]) <= hyp_tol)
            throw DegenerateSplitting("more eigenvalues of JL near zero than the kernel structure accounts for",
                                      std::abs(ge.values[order[m0]]) / std::max(1.0, normJL));
    }
    std::vector<Vec> plus_cols, minus_cols, krein_cols;
    std::vector<std::complex<double>> plus_vals;
    const double eps_ps = opt.pseudo_eps * std::max(1.0, normJL);
    for (Eigen::Index i = 0; i < n; ++i) {
        SpectrumEntry e;
        e.value = ge.values[i];
        const CVec r = ge.right.col(i), l = ge.left.col(i);
        const double lr = std::abs(l.dot(r));
        e.condition = lr > 0.0 ? l.norm() * r.norm() / lr : INFINITY;
        const Vec a = r.real(), b = r.imag();
        e.krein = ps.pair(ps.L * a, a) + ps.pair(ps.L * b, b);
        const double re = e.value.real(), im = e.value.imag();
        if (in_kernel[static_cast<std::size_t>(i)]) {
            e.kind = "kernel";
        } else if (re > hyp_tol) {
            e.kind = "unstable";
            if (im >= 0.0) {
                plus_cols.push_back(a);
                if (im > 0.0) plus_cols.push_back(b);
            }
            plus_vals.push_back(e.value);
        } else if (re < -hyp_tol) {
            e.kind = "stable";
            if (im >= 0.0) {
                minus_cols.push_back(a);
                if (im > 0.0) minus_cols.push_back(b);
            }
        } else {
            const double scale = normL * ps.weight * r.squaredNorm();
            if (std::abs(e.krein) <= opt.tol * scale)
                throw DegenerateSplitting("Krein signature of eigenvalue " + std::to_string(re) + (im < 0 ? "" : "+") +
                                              std::to_string(im) + "i on the imaginary axis is undecidable (form " +
                                              std::to_string(e.krein / scale) + ")",
                                          std::abs(e.krein) / scale);
            e.kind = e.krein < 0.0 ? "krein-negative" : "center";
            if (e.krein < 0.0 && im > 0.0) {
                krein_cols.push_back(a);
                krein_cols.push_back(b);
            }
            dec.center_pseudo_abscissa = std::max(dec.center_pseudo_abscissa, std::abs(re) + e.condition * eps_ps);
        }
        dec.spectrum.push_back(e);
    }
    const Mat Vplus = orthonormalize(to_mat(plus_cols));
    const Mat Vminus = orthonormalize(to_mat(minus_cols));
    if (Vplus.cols() != Vminus.cols())
        throw DegenerateSplitting("unstable and stable dimensions differ", hyp_tol / std::max(1.0, normJL));
    dec.d = static_cast<int>(Vplus.cols());

    const Mat Vd1 = hcat({ytilde, negative_tails, orthonormalize(to_mat(krein_cols))}, n);
    const Mat Vd2(n, 0);
    dec.d1 = static_cast<int>(Vd1.cols());
    dec.d2 = 0;
    dec.index_consistent = dec.d1 == dec.n_minus + dec.dim_ker - dec.translations - dec.d;

    dec.V = hcat({T, Vd1, Vd2, Vplus, Vminus}, n);
    dec.offsets = {0, T.cols(), T.cols() + Vd1.cols(), T.cols() + Vd1.cols(),
                   T.cols() + Vd1.cols() + Vplus.cols(), T.cols() + Vd1.cols() + 2 * Vplus.cols()};

    // Candidate duals: Riesz images of kernel vectors, L images of the rest.
    const Mat rest = dec.V.rightCols(dec.V.cols() - kfull.cols());
    const Mat cand = hcat({Rk, ps.L * rest}, n);
    const Mat G = ps.weight * cand.transpose() * dec.V;
    const double cond = condition_number(G);
    if (!(cond <= opt.max_gram_condition))
        throw NoConvergence("dual Gram matrix is ill conditioned (condition " + std::to_string(cond) + ")", {cond});
    dec.Z = cand * G.inverse().transpose();
    if (ps.group_band) {
        // keep the stored bases where translation is exact, then restore biorthogonality
        dec.V = apply_columns(dec.V, ps.group_band);
        dec.Z = apply_columns(dec.Z, ps.group_band);
        const Mat G2 = ps.weight * dec.Z.transpose() * dec.V;
        dec.Z = dec.Z * G2.inverse().transpose();
    }

    dec.M_full = ps.weight * dec.Z.transpose() * (JL * dec.V);
    if (dec.d > 0) {
        const Mat Mp = dec.M(Block::Plus, Block::Plus);
        const GenEig me = general_eigen(Mp);
        dec.lambda = INFINITY;
        for (Eigen::Index i = 0; i < me.values.size(); ++i) dec.lambda = std::min(dec.lambda, me.values[i].real());
    }
    return dec;
}

Eigen::Index Decomposition::size(Block b) const {
    if (b == Block::E) return space->dim - finite_size();
    const int i = static_cast<int>(b);
    return offsets[i + 1] - offsets[i];
}

Mat Decomposition::basis(Block b) const {
    if (b == Block::E) throw ParameterError("the centre fibre has no finite basis");
    const int i = static_cast<int>(b);
    return V.middleCols(offsets[i], size(b));
}

Mat Decomposition::duals(Block b) const {
    if (b == Block::E) throw ParameterError("the centre fibre has no finite dual basis");
    const int i = static_cast<int>(b);
    return Z.middleCols(offsets[i], size(b));
}

Mat Decomposition::M(Block to, Block from) const {
    if (to == Block::E || from == Block::E) throw ParameterError("centre block is not finite");
    return M_full.block(offsets[static_cast<int>(to)], offsets[static_cast<int>(from)], size(to), size(from));
}

namespace {

Mat translate_columns(const PhaseSpace& ps, const Mat& A, const Vec& y) {
    if (y.isZero(0.0)) return A;
    Mat out(A.rows(), A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) out.col(j) = ps.translate(A.col(j), y);
    return out;
}

}  // namespace

Mat Decomposition::basis_at(const Vec& y, Block b) const { return translate_columns(*space, basis(b), y); }
Mat Decomposition::duals_at(const Vec& y, Block b) const { return translate_columns(*space, duals(b), y); }

Vec Decomposition::coefficients(const Vec& y, Block b, const Vec& w) const {
    return space->weight * (duals_at(y, b).transpose() * w);
}

Vec Decomposition::project_finite(const Vec& y, const Vec& w) const {
    const Mat Vy = translate_columns(*space, V, y), Zy = translate_columns(*space, Z, y);
    return Vy * (space->weight * (Zy.transpose() * w));
}

Vec Decomposition::project(const Vec& y, Block b, const Vec& w) const {
    if (w.size() != space->dim) throw ShapeError("vector has wrong length");
    if (b == Block::E) return w - project_finite(y, w);
    return basis_at(y, b) * coefficients(y, b, w);
}

Vec Decomposition::d_project(const Vec& y, Block b, const Vec& z, const Vec& w) const {
    const PhaseSpace& ps = *space;
    auto finite = [&](Block blk) {
        const Mat Vy = basis_at(y, blk), Zy = duals_at(y, blk);
        Vec out = Vec::Zero(ps.dim);
        for (Eigen::Index j = 0; j < Vy.cols(); ++j) {
            out += ps.pair(ps.derivative(Zy.col(j), z), w) * Vy.col(j);
            out += ps.pair(Zy.col(j), w) * ps.derivative(Vy.col(j), z);
        }
        return out;
    };
    if (b != Block::E) return finite(b);
    Vec out = Vec::Zero(ps.dim);
    for (int i = 0; i < kFiniteBlocks; ++i) out -= finite(static_cast<Block>(i));
    return out;
}

Vec Decomposition::assemble(const Vec& y, const std::array<Vec, kFiniteBlocks>& coeffs, const Vec& ve) const {
    Vec out = ve;
    for (int i = 0; i < kFiniteBlocks; ++i) {
        const auto b = static_cast<Block>(i);
        if (coeffs[i].size() != size(b)) throw ShapeError(std::string("coefficient vector for block ") + block_name(b) +
                                                          " has wrong length");
        if (size(b) > 0) out += basis_at(y, b) * coeffs[i];
    }
    return out;
}

FibreModes lowest_fibre_modes(const Decomposition& dec, Eigen::Index m) {
    const PhaseSpace& ps = *dec.space;
    const Eigen::Index n = ps.dim;
    const Mat Q = orthogonal_complement(dec.Z);
    Mat R(n, n);
    Vec e = Vec::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        e[j] = 1.0;
        R.col(j) = ps.riesz(e);
        e[j] = 0.0;
    }
    R = 0.5 * (R + R.transpose()).eval();
    if (ps.grid) {
        const Eigen::Index h = n / 2;
        R.bottomRightCorner(h, h).array() += 1.0 / static_cast<double>(h);
    }
    const Mat A = Q.transpose() * ps.L * Q;
    const Mat B = Q.transpose() * R * Q;
    const SymEig ge = generalized_symmetric_eigen(0.5 * (A + A.transpose()), 0.5 * (B + B.transpose()));
    m = std::min(m, ge.values.size());
    FibreModes out;
    out.values = ge.values.head(m);
    // dsygvd normalises x^T B x = 1; rescale to the weighted X1 norm
    out.modes = Q * ge.vectors.leftCols(m) / std::sqrt(ps.weight);
    return out;
}

}  // namespace imk
