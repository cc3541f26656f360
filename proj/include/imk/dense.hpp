#pragma once

#include "imk/field.hpp"

#include <complex>

namespace imk {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct SymEig {
    Vec values;  // ascending
    Mat vectors;
};

struct GenEig {
    CVec values;
    CMat right;
    CMat left;  // empty unless requested
};

/// Symmetric eigen-decomposition (LAPACK dsyevd).
SymEig symmetric_eigen(const Mat& A);
/// A x = mu B x with B symmetric positive definite (LAPACK dsygvd); eigenvectors are B-orthonormal.
SymEig generalized_symmetric_eigen(const Mat& A, const Mat& B);
/// Nonsymmetric eigen-decomposition (LAPACK dgeev); eigenvectors normalised to unit 2-norm.
GenEig general_eigen(const Mat& A, bool want_left = false);

/// Orthonormal basis of the orthogonal complement of span(A) (full QR).
Mat orthogonal_complement(const Mat& A);

}  // namespace imk
