#include "fokkerfit/fp_solver.hpp"

#include <cmath>

namespace fokkerfit {

namespace {

// Frozen constant of the discrete parabolic estimate, measured once on the
// OU calibration family (T <= 1, unit-scale coefficients) and fixed.
constexpr double kStabilityConstant = 4.0;

struct Tridiag {
    Vec lower, diag, upper;  // lower(0) and upper(K-1) unused

    void resize(int k) {
        lower = Vec::Zero(k);
        diag = Vec::Zero(k);
        upper = Vec::Zero(k);
    }
};

// Conservative flux operator along one axis: (Lp)_i = (F_{i+1/2} - F_{i-1/2})/h
// with F_{i+1/2} = (D_{i+1} p_{i+1} - D_i p_i)/(2h) - b_{i+1/2}(p_i + p_{i+1})/2
// and zero boundary fluxes. Column sums vanish identically.
void line_operator(const Vec& D, const Vec& bface, double h, Tridiag& op) {
    const int K = static_cast<int>(D.size());
    op.resize(K);
    const double ih = 1.0 / h, ih2 = 1.0 / (2.0 * h * h);
    for (int i = 0; i < K; ++i) {
        double up = 0.0, dg = 0.0, lo = 0.0;
        if (i + 1 < K) {  // face i+1/2
            double bf = bface(i);
            up += D(i + 1) * ih2 - 0.5 * bf * ih;
            dg += -D(i) * ih2 - 0.5 * bf * ih;
        }
        if (i > 0) {  // face i-1/2
            double bf = bface(i - 1);
            dg += -D(i) * ih2 + 0.5 * bf * ih;
            lo += D(i - 1) * ih2 + 0.5 * bf * ih;
        }
        op.lower(i) = lo;
        op.diag(i) = dg;
        op.upper(i) = up;
    }
}

Vec apply_tridiag(const Tridiag& op, const Vec& p) {
    const int K = static_cast<int>(p.size());
    Vec out(K);
    for (int i = 0; i < K; ++i) {
        double v = op.diag(i) * p(i);
        if (i > 0) v += op.lower(i) * p(i - 1);
        if (i + 1 < K) v += op.upper(i) * p(i + 1);
        out(i) = v;
    }
    return out;
}

// Thomas algorithm for (I - c*op) x = rhs.
Vec solve_shifted(const Tridiag& op, double c, const Vec& rhs) {
    const int K = static_cast<int>(rhs.size());
    Vec dp(K), cp(K), x(K);
    double den = 1.0 - c * op.diag(0);
    cp(0) = -c * op.upper(0) / den;
    dp(0) = rhs(0) / den;
    for (int i = 1; i < K; ++i) {
        double a = -c * op.lower(i);
        den = (1.0 - c * op.diag(i)) - a * cp(i - 1);
        if (den == 0.0) throw NumericalError("solve_fp: singular tridiagonal solve");
        cp(i) = -c * op.upper(i) / den;
        dp(i) = (rhs(i) - a * dp(i - 1)) / den;
    }
    x(K - 1) = dp(K - 1);
    for (int i = K - 2; i >= 0; --i) x(i) = dp(i) - cp(i) * x(i + 1);
    return x;
}

void check_initial(const Lattice& lat, const Vec& p0) {
    if (static_cast<int>(p0.size()) != lat.space_points())
        throw ConfigError("solve_fp: initial size mismatch");
    if (p0.minCoeff() < -1e-12) throw ConfigError("solve_fp: initial density must be nonnegative");
    GridDensity g(lat);
    g.values.row(0) = p0.transpose();
    double mass = g.mass_at(0);
    if (std::abs(mass - 1.0) > 1e-6)
        throw ConfigError("solve_fp: initial mass " + std::to_string(mass) + " differs from 1");
}

class Solver1D {
public:
    Solver1D(const FpProblem& pb) : pb_(pb), lat_(pb.lattice) {
        K_ = lat_.nx[0];
        h_ = lat_.dx(0);
        nodes_ = lat_.space_matrix();
        faces_ = Mat(1, K_ - 1);
        for (int i = 0; i + 1 < K_; ++i) faces_(0, i) = 0.5 * (nodes_(0, i) + nodes_(0, i + 1));
    }

    void build(double t, Tridiag& op) const {
        Mat av = pb_.coefficients->a_batch(t, nodes_);
        Mat bv = pb_.coefficients->b_batch(t, faces_);
        Vec D = av.row(0).transpose();
        D.array() += pb_.alpha;
        line_operator(D, bv.row(0).transpose(), h_, op);
    }

    Vec step(const Vec& p, double t, double dt) const {
        Tridiag op;
        build(t + 0.5 * dt, op);
        Vec rhs = p + 0.5 * dt * apply_tridiag(op, p);
        if (pb_.source) {
            double tm = t + 0.5 * dt;
            for (int i = 0; i < K_; ++i) rhs(i) += dt * pb_.source(tm, nodes_.col(i));
        }
        return solve_shifted(op, 0.5 * dt, rhs);
    }

private:
    const FpProblem& pb_;
    const Lattice& lat_;
    int K_ = 0;
    double h_ = 0.0;
    Mat nodes_, faces_;
};

class Solver2D {
public:
    Solver2D(const FpProblem& pb) : pb_(pb), lat_(pb.lattice) {
        K0_ = lat_.nx[0];
        K1_ = lat_.nx[1];
        h0_ = lat_.dx(0);
        h1_ = lat_.dx(1);
        nodes_ = lat_.space_matrix();  // 2 x P, dim0 fastest
        faces0_ = Mat(2, (K0_ - 1) * K1_);
        for (int j = 0; j < K1_; ++j)
            for (int i = 0; i + 1 < K0_; ++i) {
                int f = j * (K0_ - 1) + i;
                faces0_.col(f) = 0.5 * (node(i, j) + node(i + 1, j));
            }
        faces1_ = Mat(2, K0_ * (K1_ - 1));
        for (int j = 0; j + 1 < K1_; ++j)
            for (int i = 0; i < K0_; ++i) {
                int f = j * K0_ + i;
                faces1_.col(f) = 0.5 * (node(i, j) + node(i, j + 1));
            }
    }

    bool has_cross(double t0) const {
        Mat av = pb_.coefficients->a_batch(t0, nodes_);
        return av.row(1).cwiseAbs().maxCoeff() > 1e-14 || av.row(2).cwiseAbs().maxCoeff() > 1e-14;
    }

    Vec node(int i, int j) const { return nodes_.col(j * K0_ + i); }

    struct StepData {
        Mat av;            // 4 x P (a11, a21, a12, a22 flattened)
        Mat b0;            // at dim0 faces
        Mat b1;            // at dim1 faces
        std::vector<Tridiag> ops0;  // per j line
        std::vector<Tridiag> ops1;  // per i line
    };

    void build(double t, StepData& sd) const {
        sd.av = pb_.coefficients->a_batch(t, nodes_);
        sd.b0 = pb_.coefficients->b_batch(t, faces0_);
        sd.b1 = pb_.coefficients->b_batch(t, faces1_);
        sd.ops0.assign(K1_, Tridiag{});
        Vec D(K0_), bf(std::max(K0_ - 1, 1));
        for (int j = 0; j < K1_; ++j) {
            for (int i = 0; i < K0_; ++i) D(i) = sd.av(0, j * K0_ + i) + pb_.alpha;
            for (int i = 0; i + 1 < K0_; ++i) bf(i) = sd.b0(0, j * (K0_ - 1) + i);
            line_operator(D, bf.head(K0_ - 1), h0_, sd.ops0[j]);
        }
        sd.ops1.assign(K0_, Tridiag{});
        Vec D1(K1_), bf1(std::max(K1_ - 1, 1));
        for (int i = 0; i < K0_; ++i) {
            for (int j = 0; j < K1_; ++j) D1(j) = sd.av(3, j * K0_ + i) + pb_.alpha;
            for (int j = 0; j + 1 < K1_; ++j) bf1(j) = sd.b1(1, j * K0_ + i);
            line_operator(D1, bf1.head(K1_ - 1), h1_, sd.ops1[i]);
        }
    }

    Vec apply_A1(const StepData& sd, const Vec& p) const {
        Vec out(p.size());
        for (int j = 0; j < K1_; ++j) {
            Vec line = p.segment(j * K0_, K0_);
            out.segment(j * K0_, K0_) = apply_tridiag(sd.ops0[j], line);
        }
        return out;
    }

    Vec apply_A2(const StepData& sd, const Vec& p) const {
        Vec out(p.size());
        Vec line(K1_), res(K1_);
        for (int i = 0; i < K0_; ++i) {
            for (int j = 0; j < K1_; ++j) line(j) = p(j * K0_ + i);
            res = apply_tridiag(sd.ops1[i], line);
            for (int j = 0; j < K1_; ++j) out(j * K0_ + i) = res(j);
        }
        return out;
    }

    // Explicit conservative cross term d1 d2 (a12 p), split symmetrically into
    // face fluxes along both axes; zero boundary fluxes keep it conservative.
    Vec apply_cross(const StepData& sd, const Vec& p) const {
        Vec m(p.size());
        for (int q = 0; q < p.size(); ++q) m(q) = sd.av(1, q) * p(q);  // a21 == a12
        auto midx = [&](int i, int j) { return m(j * K0_ + i); };
        Vec out = Vec::Zero(p.size());

        // 0.5 * d1[ d2(m) ] via dim0 faces
        for (int j = 0; j < K1_; ++j) {
            for (int i = 0; i + 1 < K0_; ++i) {
                double d2m;
                if (j == 0)
                    d2m = 0.5 * (midx(i, 1) + midx(i + 1, 1) - midx(i, 0) - midx(i + 1, 0)) / h1_;
                else if (j == K1_ - 1)
                    d2m = 0.5 * (midx(i, j) + midx(i + 1, j) - midx(i, j - 1) - midx(i + 1, j - 1)) / h1_;
                else
                    d2m = 0.25 * (midx(i, j + 1) + midx(i + 1, j + 1) - midx(i, j - 1) -
                                  midx(i + 1, j - 1)) / h1_;
                double flux = 0.5 * d2m;
                out(j * K0_ + i) += flux / h0_;
                out(j * K0_ + i + 1) -= flux / h0_;
            }
        }
        // 0.5 * d2[ d1(m) ] via dim1 faces
        for (int j = 0; j + 1 < K1_; ++j) {
            for (int i = 0; i < K0_; ++i) {
                double d1m;
                if (i == 0)
                    d1m = 0.5 * (midx(1, j) + midx(1, j + 1) - midx(0, j) - midx(0, j + 1)) / h0_;
                else if (i == K0_ - 1)
                    d1m = 0.5 * (midx(i, j) + midx(i, j + 1) - midx(i - 1, j) - midx(i - 1, j + 1)) / h0_;
                else
                    d1m = 0.25 * (midx(i + 1, j) + midx(i + 1, j + 1) - midx(i - 1, j) -
                                  midx(i - 1, j + 1)) / h0_;
                double flux = 0.5 * d1m;
                out(j * K0_ + i) += flux / h1_;
                out((j + 1) * K0_ + i) -= flux / h1_;
            }
        }
        return out;
    }

    Vec step(const Vec& p, double t, double dt) const {
        StepData sd;
        build(t + 0.5 * dt, sd);
        Vec cross = apply_cross(sd, p);
        Vec src = Vec::Zero(p.size());
        if (pb_.source) {
            double tm = t + 0.5 * dt;
            for (int q = 0; q < p.size(); ++q) src(q) = pb_.source(tm, nodes_.col(q));
        }

        // Peaceman-Rachford sweep, cross term explicit at both half steps.
        Vec rhs = p + 0.5 * dt * (apply_A2(sd, p) + cross + src);
        Vec ustar(p.size());
        for (int j = 0; j < K1_; ++j)
            ustar.segment(j * K0_, K0_) =
                solve_shifted(sd.ops0[j], 0.5 * dt, rhs.segment(j * K0_, K0_));

        Vec cross2 = apply_cross(sd, ustar);
        rhs = ustar + 0.5 * dt * (apply_A1(sd, ustar) + cross2 + src);
        Vec line(K1_), res(K1_);
        Vec out(p.size());
        for (int i = 0; i < K0_; ++i) {
            for (int j = 0; j < K1_; ++j) line(j) = rhs(j * K0_ + i);
            res = solve_shifted(sd.ops1[i], 0.5 * dt, line);
            for (int j = 0; j < K1_; ++j) out(j * K0_ + i) = res(j);
        }
        return out;
    }

private:
    const FpProblem& pb_;
    const Lattice& lat_;
    int K0_ = 0, K1_ = 0;
    double h0_ = 0.0, h1_ = 0.0;
    Mat nodes_, faces0_, faces1_;
};

}  // namespace

GridDensity solve_fp(const FpProblem& problem) {
    const Lattice& lat = problem.lattice;
    const int n = lat.dim();
    if (n != 1 && n != 2) throw ConfigError("solve_fp: n in {1,2} supported");
    if (problem.alpha <= 0.0) throw ConfigError("solve_fp: alpha > 0 required");
    check_initial(lat, problem.initial_values);

    double dxmin = lat.dx(0);
    for (int d = 1; d < n; ++d) dxmin = std::min(dxmin, lat.dx(d));
    double dt_want = problem.dt > 0.0 ? problem.dt : 10.0 * dxmin * dxmin;

    GridDensity out(lat);
    out.values.row(0) = problem.initial_values.transpose();
    Vec p = problem.initial_values;

    Solver1D s1(problem);
    Solver2D* s2 = nullptr;
    std::unique_ptr<Solver2D> s2_holder;
    if (n == 2) {
        s2_holder = std::make_unique<Solver2D>(problem);
        s2 = s2_holder.get();
        if (s2->has_cross(lat.t0)) dt_want *= 0.25;  // explicit cross term
    }

    const bool check_mass = !problem.source;
    // The flux form conserves the plain nodal sum exactly; track that
    // functional (the trapezoid mass differs only by boundary tail terms).
    const double mass0 = p.sum() * lat.cell_volume();
    for (int k = 1; k < lat.nt; ++k) {
        double ta = lat.time_at(k - 1), tb = lat.time_at(k);
        int steps = std::max(1, static_cast<int>(std::ceil((tb - ta) / dt_want - 1e-12)));
        double dt = (tb - ta) / steps;
        for (int s = 0; s < steps; ++s) {
            double t = ta + s * dt;
            p = n == 1 ? s1.step(p, t, dt) : s2->step(p, t, dt);
        }
        if (!p.allFinite()) throw NumericalError("solve_fp: non-finite solution at output " +
                                                 std::to_string(k));
        out.values.row(k) = p.transpose();
        if (p.minCoeff() < -1e-6)
            throw NumericalError("solve_fp: negative undershoot " + std::to_string(p.minCoeff()));
        if (check_mass) {
            double drift = p.sum() * lat.cell_volume() - mass0;
            double budget = 1e-6 * std::max(1.0, tb - lat.t0);
            if (std::abs(drift) > budget)
                throw NumericalError("solve_fp: mass drift " + std::to_string(drift) + " at t=" +
                                     std::to_string(tb));
        }
    }
    return out;
}

double metric_E(const CoefficientField& field, double alpha, const GridDensity& reference,
                const Vec& initial_values, double dt) {
    FpProblem pb;
    pb.coefficients = FieldPtr(&field, [](const CoefficientField*) {});
    pb.alpha = alpha;
    pb.lattice = reference.lattice;
    pb.initial_values = initial_values;
    pb.dt = dt;
    GridDensity sol = solve_fp(pb);
    GridDensity diff(reference.lattice);
    diff.values = sol.values - reference.values;
    return diff.l2_spacetime_sq();
}

std::pair<double, double> observation_gap(const SourceFn& f, const GridDensity& p1,
                                          const GridDensity& p2) {
    if (!p1.lattice.compatible(p2.lattice)) throw ConfigError("observation_gap: lattice mismatch");
    const Lattice& lat = p1.lattice;
    GridDensity fg(lat);
    Mat pts = lat.space_matrix();
    for (int k = 0; k < lat.nt; ++k) {
        double t = lat.time_at(k);
        for (int p = 0; p < lat.space_points(); ++p) fg.values(k, p) = f(t, pts.col(p));
    }
    GridDensity diff(lat);
    diff.values = p1.values - p2.values;
    double lhs = std::abs(fg.inner(diff));
    double rhs = std::sqrt(fg.l2_spacetime_sq()) * std::sqrt(diff.l2_spacetime_sq());
    return {lhs, rhs};
}

StabilityVerdict stability_check(const CoefficientField& field, double alpha,
                                 const Lattice& lattice, const Vec& p1bar, const Vec& p2bar,
                                 const SourceFn& f1, const SourceFn& f2, double dt) {
    FpProblem pb;
    pb.coefficients = FieldPtr(&field, [](const CoefficientField*) {});
    pb.alpha = alpha;
    pb.lattice = lattice;
    pb.dt = dt;

    pb.initial_values = p1bar;
    pb.source = f1;
    GridDensity sol1 = solve_fp(pb);
    pb.initial_values = p2bar;
    pb.source = f2;
    GridDensity sol2 = solve_fp(pb);

    GridDensity diff(lattice);
    diff.values = sol1.values - sol2.values;
    double lhs = 0.0;
    for (int k = 0; k < lattice.nt; ++k) {
        double norm = diff.l2_space(k);
        lhs = std::max(lhs, norm * norm);
    }

    GridDensity dinit(lattice);
    dinit.values.row(0) = (p1bar - p2bar).transpose();
    double rhs = dinit.l2_space(0) * dinit.l2_space(0);
    GridDensity df(lattice);
    Mat pts = lattice.space_matrix();
    for (int k = 0; k < lattice.nt; ++k) {
        double t = lattice.time_at(k);
        for (int p = 0; p < lattice.space_points(); ++p) {
            double v1 = f1 ? f1(t, pts.col(p)) : 0.0;
            double v2 = f2 ? f2(t, pts.col(p)) : 0.0;
            df.values(k, p) = v1 - v2;
        }
    }
    rhs += df.l2_spacetime_sq();

    StabilityVerdict v;
    v.lhs = lhs;
    v.rhs = rhs;
    v.constant = kStabilityConstant;
    v.margin = v.constant * rhs - lhs;
    v.pass = lhs <= v.constant * rhs + 1e-14;
    return v;
}

}  // namespace fokkerfit
