#include "imk/field.hpp"

#include "imk/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace imk {

Grid::Grid(std::vector<int> d, std::vector<double> l) : dims(std::move(d)), lengths(std::move(l)) {
    validate();
}

std::size_t Grid::size() const {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < spatial_dim(); ++a) v *= spacing(a);
    return v;
}

double Grid::volume() const {
    return std::accumulate(lengths.begin(), lengths.end(), 1.0, std::multiplies<>());
}

Eigen::ArrayXd Grid::coordinate_array(int axis) const {
    Eigen::ArrayXd out(static_cast<Eigen::Index>(size()));
    std::size_t stride = 1;
    for (int a = spatial_dim() - 1; a > axis; --a) stride *= dims[a];
    for (std::size_t idx = 0; idx < size(); ++idx) {
        int i = static_cast<int>((idx / stride) % dims[axis]);
        out[static_cast<Eigen::Index>(idx)] = coordinate(axis, i);
    }
    return out;
}

void Grid::validate() const {
    if (dims.empty() || dims.size() > 3)
        throw ShapeError("grid must have 1, 2 or 3 axes");
    if (dims.size() != lengths.size())
        throw ShapeError("grid dims and lengths differ in length");
    for (std::size_t a = 0; a < dims.size(); ++a) {
        if (dims[a] < 8 || dims[a] % 2 != 0)
            throw ShapeError("lattice size along axis " + std::to_string(a) + " must be even and >= 8");
        if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
            throw ShapeError("box length along axis " + std::to_string(a) + " must be positive");
    }
}

Field::Field(const Grid& g) : grid(g), re(Eigen::ArrayXd::Zero(g.size())), im(Eigen::ArrayXd::Zero(g.size())) {}

Field::Field(const Grid& g, Eigen::ArrayXd r, Eigen::ArrayXd i) : grid(g), re(std::move(r)), im(std::move(i)) {
    if (static_cast<std::size_t>(re.size()) != g.size() || static_cast<std::size_t>(im.size()) != g.size())
        throw ShapeError("field arrays do not conform to the grid");
}

Field Field::constant(const Grid& g, double r, double i) {
    return Field(g, Eigen::ArrayXd::Constant(g.size(), r), Eigen::ArrayXd::Constant(g.size(), i));
}

bool Field::finite() const { return re.allFinite() && im.allFinite(); }

void Field::check_conforming(const Field& other) const {
    if (grid != other.grid) throw ShapeError("fields live on different grids");
}

Field& Field::operator+=(const Field& o) {
    check_conforming(o);
    re += o.re;
    im += o.im;
    return *this;
}

Field& Field::operator-=(const Field& o) {
    check_conforming(o);
    re -= o.re;
    im -= o.im;
    return *this;
}

Field& Field::operator*=(double s) {
    re *= s;
    im *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }
Field operator*(Field a, double s) { return a *= s; }

Vec stack(const Field& f) {
    const auto n = static_cast<Eigen::Index>(f.size());
    Vec v(2 * n);
    v.head(n) = f.re.matrix();
    v.tail(n) = f.im.matrix();
    return v;
}

Field unstack(const Grid& g, const Vec& v) {
    const auto n = static_cast<Eigen::Index>(g.size());
    if (v.size() != 2 * n) throw ShapeError("stacked vector does not match grid");
    return Field(g, v.head(n).array(), v.tail(n).array());
}

double inner(const Field& a, const Field& b) {
    a.check_conforming(b);
    return ((a.re * b.re).sum() + (a.im * b.im).sum()) * a.grid.cell_volume();
}

double inner(const Grid& g, const Vec& a, const Vec& b) { return a.dot(b) * g.cell_volume(); }

Field apply_J(const Field& f) { return Field(f.grid, f.im, -f.re); }

Vec apply_J(const Vec& v) {
    const Eigen::Index n = v.size() / 2;
    Vec out(v.size());
    out.head(n) = v.tail(n);
    out.tail(n) = -v.head(n);
    return out;
}

double sup_abs(const Field& f) {
    if (f.size() == 0) return 0.0;
    return std::max(f.re.abs().maxCoeff(), f.im.abs().maxCoeff());
}

}  // namespace imk
