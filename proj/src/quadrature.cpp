#include "fokkerfit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fokkerfit/common.hpp"

namespace fokkerfit {

namespace {

// Kronrod 15 nodes on [0,1] side (symmetric); odd indices are the Gauss-7 nodes.
const double kKronrodX[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
const double kKronrodW[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
const double kGaussW[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

}  // namespace

std::vector<QuadNode> gauss_legendre(int order) {
    std::vector<QuadNode> out(order);
    int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n.
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        out[i] = {-x, w};
        out[order - 1 - i] = {x, w};
    }
    return out;
}

std::vector<QuadNode> panel_nodes(double a, double b, int panels, int order) {
    auto base = gauss_legendre(order);
    std::vector<QuadNode> out;
    out.reserve(static_cast<std::size_t>(panels) * order);
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h;
        double mid = lo + 0.5 * h;
        for (const auto& n : base) out.push_back({mid + 0.5 * h * n.x, 0.5 * h * n.w});
    }
    return out;
}

std::pair<double, double> gk15(const std::function<double(double)>& f, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double fc = f(mid);
    double kron = kKronrodW[7] * fc;
    double gauss = kGaussW[3] * fc;
    for (int i = 0; i < 7; ++i) {
        double fv = f(mid - half * kKronrodX[i]) + f(mid + half * kKronrodX[i]);
        kron += kKronrodW[i] * fv;
        if (i % 2 == 1) gauss += kGaussW[i / 2] * fv;
    }
    double ik = kron * half;
    // |K15 - G7| overestimates the Kronrod error; conservative on purpose.
    return {ik, std::abs(ik - gauss * half)};
}

GKPanel gk15_panel(double a, double b) {
    GKPanel p{};
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < 7; ++i) {
        p.x[i] = mid - half * kKronrodX[i];
        p.x[14 - i] = mid + half * kKronrodX[i];
        p.wk[i] = p.wk[14 - i] = half * kKronrodW[i];
        double wg = (i % 2 == 1) ? half * kGaussW[i / 2] : 0.0;
        p.wg[i] = p.wg[14 - i] = wg;
    }
    p.x[7] = mid;
    p.wk[7] = half * kKronrodW[7];
    p.wg[7] = half * kGaussW[3];
    return p;
}

QuadResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                       const AdaptiveOptions& opts) {
    struct Seg {
        double a, b, value, error;
        bool operator<(const Seg& o) const {
            return error < o.error || (error == o.error && a < o.a);
        }
    };

    std::vector<double> cuts = {a, b};
    for (double c : opts.breakpoints)
        if (c > a && c < b) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());

    std::multiset<Seg> segs;
    double total = 0.0, toterr = 0.0;
    auto push = [&](double lo, double hi) {
        auto [v, e] = gk15(f, lo, hi);
        segs.insert({lo, hi, v, e});
        total += v;
        toterr += e;
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) push(cuts[i], cuts[i + 1]);

    while (toterr > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
        if (static_cast<int>(segs.size()) >= opts.max_intervals)
            throw NumericalError("adaptive_gk: interval budget exhausted (error " +
                                 std::to_string(toterr) + " over [" + std::to_string(a) + "," +
                                 std::to_string(b) + "])");
        Seg worst = *segs.rbegin();
        segs.erase(std::prev(segs.end()));
        total -= worst.value;
        toterr -= worst.error;
        double mid = 0.5 * (worst.a + worst.b);
        push(worst.a, mid);
        push(mid, worst.b);
    }
    return {total, toterr, static_cast<int>(segs.size())};
}

}  // namespace fokkerfit
