#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace imk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Periodic lattice. Arrays on it are row-major with the last axis fastest.
struct Grid {
    std::vector<int> dims;
    std::vector<double> lengths;

    Grid() = default;
    Grid(std::vector<int> d, std::vector<double> l);

    int spatial_dim() const { return static_cast<int>(dims.size()); }
    std::size_t size() const;
    double spacing(int axis) const { return lengths[axis] / dims[axis]; }
    double cell_volume() const;
    double volume() const;

    /// Coordinate of lattice index i along an axis, centred so the box is [-L/2, L/2).
    double coordinate(int axis, int i) const { return -0.5 * lengths[axis] + i * spacing(axis); }

    /// Coordinates of every lattice point along one axis, flattened over the grid.
    Eigen::ArrayXd coordinate_array(int axis) const;

    void validate() const;
    bool operator==(const Grid& o) const { return dims == o.dims && lengths == o.lengths; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// Complex grid function stored as the real pair (re, im).
struct Field {
    Grid grid;
    Eigen::ArrayXd re;
    Eigen::ArrayXd im;

    Field() = default;
    explicit Field(const Grid& g);
    Field(const Grid& g, Eigen::ArrayXd r, Eigen::ArrayXd i);

    static Field constant(const Grid& g, double r, double i = 0.0);

    std::size_t size() const { return grid.size(); }
    bool finite() const;
    void check_conforming(const Field& other) const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
Field operator*(Field a, double s);

/// Stack (re, im) into one real vector of length 2N.
Vec stack(const Field& f);
Field unstack(const Grid& g, const Vec& v);

/// Real inner product sum(re*re' + im*im') * dV.
double inner(const Field& a, const Field& b);
double inner(const Grid& g, const Vec& a, const Vec& b);

/// Multiplication by -i in the real-pair picture: (a, b) -> (b, -a).
Field apply_J(const Field& f);
Vec apply_J(const Vec& v);

/// Pointwise maximum of |re| and |im|.
double sup_abs(const Field& f);

}  // namespace imk
