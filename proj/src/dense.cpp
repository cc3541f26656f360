#include "imk/dense.hpp"

#include "imk/errors.hpp"

#include <lapacke.h>

namespace imk {

SymEig symmetric_eigen(const Mat& A) {
    if (A.rows() != A.cols()) throw ShapeError("symmetric_eigen needs a square matrix");
    SymEig out;
    out.vectors = A;
    out.values.resize(A.rows());
    const auto n = static_cast<lapack_int>(A.rows());
    if (n == 0) return out;
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, out.vectors.data(), n, out.values.data());
    if (info != 0) throw NoConvergence("dsyevd failed with info " + std::to_string(info), {});
    return out;
}

SymEig generalized_symmetric_eigen(const Mat& A, const Mat& B) {
    if (A.rows() != A.cols() || B.rows() != A.rows() || B.cols() != A.cols())
        throw ShapeError("generalized_symmetric_eigen needs square matrices of equal size");
    SymEig out;
    out.vectors = A;
    Mat Bw = B;
    out.values.resize(A.rows());
    const auto n = static_cast<lapack_int>(A.rows());
    if (n == 0) return out;
    const lapack_int info =
        LAPACKE_dsygvd(LAPACK_COL_MAJOR, 1, 'V', 'U', n, out.vectors.data(), n, Bw.data(), n, out.values.data());
    if (info != 0) throw NoConvergence("dsygvd failed with info " + std::to_string(info), {});
    return out;
}

GenEig general_eigen(const Mat& A, bool want_left) {
    if (A.rows() != A.cols()) throw ShapeError("general_eigen needs a square matrix");
    const auto n = static_cast<lapack_int>(A.rows());
    Mat work = A;
    Vec wr(n), wi(n);
    Mat vr(n, n), vl(want_left ? n : 1, want_left ? n : 1);
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, want_left ? 'V' : 'N', 'V', n, work.data(), n, wr.data(),
                                          wi.data(), vl.data(), want_left ? n : 1, vr.data(), n);
    if (info != 0) throw NoConvergence("dgeev failed with info " + std::to_string(info), {});
    GenEig out;
    out.values.resize(n);
    out.right.resize(n, n);
    if (want_left) out.left.resize(n, n);
    // complex pairs are stored as (re, im) column pairs for the eigenvalue with positive imaginary part
    for (lapack_int j = 0; j < n; ++j) {
        out.values[j] = {wr[j], wi[j]};
        if (wi[j] == 0.0) {
            out.right.col(j) = vr.col(j).cast<std::complex<double>>();
            if (want_left) out.left.col(j) = vl.col(j).cast<std::complex<double>>();
        } else if (wi[j] > 0.0 && j + 1 < n) {
            const std::complex<double> I(0.0, 1.0);
            out.right.col(j) = vr.col(j).cast<std::complex<double>>() + I * vr.col(j + 1).cast<std::complex<double>>();
            out.right.col(j + 1) = out.right.col(j).conjugate();
            if (want_left) {
                out.left.col(j) = vl.col(j).cast<std::complex<double>>() + I * vl.col(j + 1).cast<std::complex<double>>();
                out.left.col(j + 1) = out.left.col(j).conjugate();
            }
            out.values[j + 1] = {wr[j + 1], wi[j + 1]};
            ++j;
        }
    }
    return out;
}

Mat orthogonal_complement(const Mat& A) {
    const Eigen::Index n = A.rows(), k = A.cols();
    if (k == 0) return Mat::Identity(n, n);
    Eigen::HouseholderQR<Mat> qr(A);
    const Mat Q = qr.householderQ();
    return Q.rightCols(n - k);
}

}  // namespace imk
