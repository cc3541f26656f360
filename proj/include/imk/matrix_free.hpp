#pragma once

// Adapters that let Eigen's iterative solvers run on operators given as callables.

#include "imk/field.hpp"

#include <Eigen/Sparse>

#include <functional>

namespace imk {
class MatrixFreeOperator;
}

namespace Eigen::internal {
template <>
struct traits<imk::MatrixFreeOperator> : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace imk {

class MatrixFreeOperator : public Eigen::EigenBase<MatrixFreeOperator> {
public:
    using Scalar = double;
    using RealScalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    MatrixFreeOperator(Eigen::Index n, std::function<Vec(const Vec&)> op) : n_(n), op_(std::move(op)) {}

    Eigen::Index rows() const { return n_; }
    Eigen::Index cols() const { return n_; }
    Vec apply(const Vec& x) const { return op_(x); }

    template <typename Rhs>
    Eigen::Product<MatrixFreeOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
        return Eigen::Product<MatrixFreeOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }

private:
    Eigen::Index n_;
    std::function<Vec(const Vec&)> op_;
};

/// Preconditioner wrapper: `solve(b)` returns an approximation of A^{-1} b.
class CallablePreconditioner {
public:
    using Scalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

    CallablePreconditioner() : apply_([](const Vec& b) { return b; }) {}
    void set(std::function<Vec(const Vec&)> f) { apply_ = std::move(f); }

    template <typename M>
    CallablePreconditioner& analyzePattern(const M&) { return *this; }
    template <typename M>
    CallablePreconditioner& factorize(const M&) { return *this; }
    template <typename M>
    CallablePreconditioner& compute(const M&) { return *this; }

    template <typename Rhs>
    Vec solve(const Rhs& b) const { return apply_(Vec(b)); }

    Eigen::ComputationInfo info() { return Eigen::Success; }

private:
    std::function<Vec(const Vec&)> apply_;
};

}  // namespace imk

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<imk::MatrixFreeOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<imk::MatrixFreeOperator, Rhs,
                                generic_product_impl<imk::MatrixFreeOperator, Rhs>> {
    using Scalar = typename Product<imk::MatrixFreeOperator, Rhs>::Scalar;
    template <typename Dest>
    static void scaleAndAddTo(Dest& dst, const imk::MatrixFreeOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
        dst.noalias() += alpha * lhs.apply(imk::Vec(rhs));
    }
};
}  // namespace Eigen::internal
