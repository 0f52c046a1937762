#ifndef FOKKERFIT_GRID_DENSITY_HPP
#define FOKKERFIT_GRID_DENSITY_HPP

#include <string>
#include <vector>

#include "fokkerfit/common.hpp"

namespace fokkerfit {

/// Uniform space-time lattice on [t0,t1] x [xlo,xhi]^n (per-dim bounds).
struct Lattice {
    double t0 = 0.0;
    double t1 = 1.0;
    int nt = 2;
    Vec xlo, xhi;            // n entries each
    std::vector<int> nx;     // n entries, nodes per dim

    int dim() const { return static_cast<int>(nx.size()); }
    int space_points() const {
        int p = 1;
        for (int c : nx) p *= c;
        return p;
    }
    double dt() const { return nt > 1 ? (t1 - t0) / (nt - 1) : 0.0; }
    double dx(int d) const { return nx[d] > 1 ? (xhi(d) - xlo(d)) / (nx[d] - 1) : 0.0; }
    double time_at(int k) const { return nt > 1 ? t0 + (t1 - t0) * k / (nt - 1) : t0; }
    Vec point_at(int flat) const;                  // flat space index -> coordinates
    std::vector<int> unflatten(int flat) const;
    int flatten(const std::vector<int>& idx) const;
    /// All space points as an n x P matrix (column per point).
    Mat space_matrix() const;
    /// Trapezoid weight of a flat space index (product of per-dim 1 or 1/2
    /// end factors), excluding the dx volume element.
    double trapezoid_weight(int flat) const;
    double cell_volume() const {
        double v = 1.0;
        for (int d = 0; d < dim(); ++d) v *= dx(d);
        return v;
    }
    bool compatible(const Lattice& o) const;
};

/// Density values on a space-time lattice; values(k, p) = u(t_k, x_p).
struct GridDensity {
    Lattice lattice;
    Mat values;  // nt x P

    GridDensity() = default;
    explicit GridDensity(Lattice lat)
        : lattice(std::move(lat)), values(Mat::Zero(lattice.nt, lattice.space_points())) {}

    /// Integral of u(t_k, .) over space by the trapezoid rule.
    double mass_at(int k) const;
    /// L2(space) norm of u(t_k, .).
    double l2_space(int k) const;
    /// Squared L2([t0,t1] x space) norm.
    double l2_spacetime_sq() const;
    /// Trapezoid value of the space-time inner product <u, v>.
    double inner(const GridDensity& other) const;

    void save(const std::string& dir, const std::string& stem = "density") const;
    static GridDensity load(const std::string& dir, const std::string& stem = "density");
};

}  // namespace fokkerfit

#endif
