#include "fokkerfit/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fokkerfit/quadrature.hpp"

namespace fokkerfit {

double space_pair_integral(const Vec& x1, const Vec& x2, double R, int n) {
    return ball_moment(0, n, R, (x1 - x2).norm());
}

double time_pair_integral(TimePairKind kind, int l, int lp, const TimeCoeffs& tc, double T) {
    AdaptiveOptions opts;
    opts.rel_tol = 1e-9;
    opts.abs_tol = 1e-14;
    opts.max_intervals = 4000;
    opts.breakpoints = tc.times();
    auto f = [&](double t) {
        double u, v;
        switch (kind) {
            case TimePairKind::CC:
                u = tc.coeffs(t)(l);
                v = tc.coeffs(t)(lp);
                break;
            case TimePairKind::DotDot:
                u = tc.coeffs_dt(t)(l);
                v = tc.coeffs_dt(t)(lp);
                break;
            default:
                u = tc.coeffs(t)(l);
                v = tc.coeffs_dt(t)(lp);
                break;
        }
        return u * v;
    };
    return adaptive_gk(f, 0.0, T, opts).value;
}

double regularizer(const Mat& A, const Vec& B, const Mat& G_Q, int n) {
    const int Q = static_cast<int>(G_Q.rows());
    double acc = 0.0;
    for (int l = 0; l < Q; ++l) {
        for (int lp = 0; lp < Q; ++lp) {
            double g = G_Q(l, lp);
            if (g == 0.0) continue;
            acc += g * A.block(l * n, lp * n, n, n).trace();
            acc += g * B.segment(l * n, n).dot(B.segment(lp * n, n));
        }
    }
    return acc;
}

double QuadraticProgram::quadratic(const Mat& A, const Vec& B) const {
    Vec v(dim());
    v(0) = 1.0;
    v.segment(1, qn()) = B;
    v.segment(1 + qn(), qn() * qn()) = Eigen::Map<const Vec>(A.data(), qn() * qn());
    return v.dot(H * v);
}

double QuadraticProgram::regularizer_value(const Mat& A, const Vec& B) const {
    return regularizer(A, B, gram, n);
}

double QuadraticProgram::objective(const Mat& A, const Vec& B) const {
    return quadratic(A, B) + lambda * regularizer_value(A, B);
}

// ---------------------------------------------------------------------------
// assembly

namespace {

struct TimePanel {
    double a, b;
    double valK = 0.0, valG = 0.0;
    double err() const { return std::abs(valK - valG); }
};

}  // namespace

QuadraticProgram assemble_H(std::shared_ptr<const DensityModel> density,
                            std::vector<STPoint> centers,
                            std::shared_ptr<const WindowedSpaceTimeKernel> kernel, double alpha,
                            double lambda, const QuadratureConfig& cfg) {
    const int n = density->dim();
    const int Q = static_cast<int>(centers.size());
    const double T = kernel->domain().T;
    const double r_star = kernel->domain().r_star;
    const int M = density->observations().M;

    FeatureAssembler feat(density, centers, kernel, alpha);
    const int dim = feat.vector_size();

    // --- space node set over [-r_star, r_star]^n
    int panels = cfg.space_panels;
    if (panels <= 0) {
        panels = static_cast<int>(std::ceil(2.0 * r_star * density->rho().bandwidth() * 0.7));
        panels = std::clamp(panels, 6, 64);
    }
    auto axis = panel_nodes(-r_star, r_star, panels, cfg.space_order);
    std::vector<Vec> ynodes;
    std::vector<double> yweights;
    if (n == 1) {
        for (const auto& q : axis) {
            Vec y(1);
            y(0) = q.x;
            ynodes.push_back(y);
            yweights.push_back(q.w);
        }
    } else if (n == 2) {
        for (const auto& qa : axis)
            for (const auto& qb : axis) {
                Vec y(2);
                y << qa.x, qb.x;
                if (y.norm() > r_star) continue;  // windowed integrand vanishes there anyway
                ynodes.push_back(y);
                yweights.push_back(qa.w * qb.w);
            }
    } else {
        throw ConfigError("assemble_H: n <= 2 supported");
    }
    const int P = static_cast<int>(ynodes.size());

    // --- cache the t-independent slice jets g_l at every space node
    std::vector<std::vector<DensityModel::SpaceJet>> gjets(P);
    parallel_for(P, [&](std::int64_t beg, std::int64_t end) {
        for (std::int64_t p = beg; p < end; ++p) {
            gjets[p].resize(M);
            for (int l = 0; l < M; ++l) gjets[p][l] = density->g_jet(l, ynodes[p]);
        }
    });

    auto density_jet_at = [&](const Vec& c, const Vec& cd, int p) {
        DensityModel::Jet pj;
        pj.grad = Vec::Zero(n);
        pj.hess = Mat::Zero(n, n);
        for (int l = 0; l < M; ++l) {
            const auto& g = gjets[p][l];
            pj.value += c(l) * g.value;
            pj.dt += cd(l) * g.value;
            pj.grad += c(l) * g.grad;
            pj.hess += c(l) * g.hess;
        }
        return pj;
    };

    // Scalar surrogate s(t) = sum_p wy ||w(t, y_p)||^2 used to place the time
    // panels; it bounds every H entry through Cauchy-Schwarz.
    auto surrogate = [&](double t) {
        Vec c = density->time_coeffs().coeffs(t);
        Vec cd = density->time_coeffs().coeffs_dt(t);
        std::vector<double> partial(P, 0.0);
        parallel_for(P, [&](std::int64_t beg, std::int64_t end) {
            Vec w;
            for (std::int64_t p = beg; p < end; ++p) {
                auto pj = density_jet_at(c, cd, static_cast<int>(p));
                feat.weight_vector_with_jet(pj, t, ynodes[p], w);
                partial[p] = yweights[p] * w.squaredNorm();
            }
        });
        double s = 0.0;
        for (double v : partial) s += v;
        return s;
    };

    // --- adaptive time panels, split at the sample times first
    std::vector<TimePanel> panels_t;
    {
        std::vector<double> cuts = density->observations().times;
        cuts.push_back(0.0);
        cuts.push_back(T);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            if (cuts[i + 1] > cuts[i]) panels_t.push_back({cuts[i], cuts[i + 1]});
    }
    auto eval_panel = [&](TimePanel& tp) {
        GKPanel g = gk15_panel(tp.a, tp.b);
        tp.valK = tp.valG = 0.0;
        for (int i = 0; i < 15; ++i) {
            double s = surrogate(g.x[i]);
            tp.valK += g.wk[i] * s;
            tp.valG += g.wg[i] * s;
        }
    };
    for (auto& tp : panels_t) eval_panel(tp);
    for (;;) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels_t.size(); ++i) {
            total += panels_t[i].valK;
            err += panels_t[i].err();
            if (panels_t[i].err() > panels_t[worst].err()) worst = i;
        }
        if (err <= cfg.time_rel_tol * std::abs(total)) break;
        if (static_cast<int>(panels_t.size()) >= cfg.max_time_intervals) {
            const auto& w = panels_t[worst];
            throw BudgetError("assemble_H: time panel budget exceeded; worst panel [" +
                              std::to_string(w.a) + "," + std::to_string(w.b) + "] error " +
                              std::to_string(w.err()));
        }
        TimePanel left{panels_t[worst].a, 0.5 * (panels_t[worst].a + panels_t[worst].b)};
        TimePanel right{left.b, panels_t[worst].b};
        eval_panel(left);
        eval_panel(right);
        panels_t[worst] = left;
        panels_t.insert(panels_t.begin() + worst + 1, right);
    }

    // --- final pass: H += W W^T over chunks of quadrature nodes
    struct Node {
        double t, wt;
        int p;
    };
    std::vector<Node> nodes;
    for (const auto& tp : panels_t) {
        GKPanel g = gk15_panel(tp.a, tp.b);
        for (int i = 0; i < 15; ++i)
            for (int p = 0; p < P; ++p) nodes.push_back({g.x[i], g.wk[i] * yweights[p], p});
    }

    Mat H = Mat::Zero(dim, dim);
    const int chunk = std::max(16, cfg.syrk_chunk);
    Mat W(dim, chunk);
    for (std::size_t base = 0; base < nodes.size(); base += chunk) {
        const int cols = static_cast<int>(std::min<std::size_t>(chunk, nodes.size() - base));
        parallel_for(cols, [&](std::int64_t beg, std::int64_t end) {
            Vec w;
            Vec cc, ccd;
            double ct = std::numeric_limits<double>::quiet_NaN();
            for (std::int64_t k = beg; k < end; ++k) {
                const Node& nd = nodes[base + k];
                if (nd.t != ct) {
                    cc = density->time_coeffs().coeffs(nd.t);
                    ccd = density->time_coeffs().coeffs_dt(nd.t);
                    ct = nd.t;
                }
                auto pj = density_jet_at(cc, ccd, nd.p);
                feat.weight_vector_with_jet(pj, nd.t, ynodes[nd.p], w);
                W.col(k) = std::sqrt(nd.wt) * w;
            }
        });
        H.selfadjointView<Eigen::Lower>().rankUpdate(W.leftCols(cols), 1.0);
    }
    H.triangularView<Eigen::Upper>() = H.transpose().triangularView<Eigen::Upper>();

    // --- exact (1,1) entry: int qtilde^2 over [0,T] x R^n via rho pairs
    if (cfg.closed_form_qq) {
        const auto& tc = density->time_coeffs();
        const auto& obs = density->observations();
        const double R = density->rho().bandwidth();
        Mat Tdd(M, M), Tdc(M, M), Tcc(M, M);
        for (int l = 0; l < M; ++l)
            for (int lp = 0; lp < M; ++lp) {
                Tdd(l, lp) = time_pair_integral(TimePairKind::DotDot, l, lp, tc, T);
                Tdc(l, lp) = time_pair_integral(TimePairKind::CDot, lp, l, tc, T);  // cdot_l c_lp
                Tcc(l, lp) = time_pair_integral(TimePairKind::CC, l, lp, tc, T);
            }
        // S matrices are symmetric in (l, lp) since rho is even; sweep the
        // upper triangle with pair-level parallelism.
        Mat S0 = Mat::Zero(M, M), S1 = Mat::Zero(M, M), S2 = Mat::Zero(M, M);
        std::vector<std::pair<int, int>> pairs;
        for (int l = 0; l < M; ++l)
            for (int lp = l; lp < M; ++lp) pairs.emplace_back(l, lp);
        parallel_for(static_cast<std::int64_t>(pairs.size()),
                     [&](std::int64_t beg, std::int64_t end) {
                         for (std::int64_t k = beg; k < end; ++k) {
                             auto [l, lp] = pairs[k];
                             double s0 = 0.0, s1 = 0.0, s2 = 0.0;
                             for (int j = 0; j < obs.N; ++j) {
                                 for (int jp = 0; jp < obs.N; ++jp) {
                                     double d =
                                         (obs.samples[l].col(j) - obs.samples[lp].col(jp)).norm();
                                     s0 += ball_moment(0, n, R, d);
                                     s1 += ball_moment(1, n, R, d);
                                     s2 += ball_moment(2, n, R, d);
                                 }
                             }
                             double inv = 1.0 / (static_cast<double>(obs.N) * obs.N);
                             S0(l, lp) = S0(lp, l) = s0 * inv;
                             S1(l, lp) = S1(lp, l) = -4.0 * M_PI * M_PI * s1 * inv;
                             S2(l, lp) = S2(lp, l) = 16.0 * std::pow(M_PI, 4) * s2 * inv;
                         }
                     });
        double h11 = 0.0;
        for (int l = 0; l < M; ++l)
            for (int lp = 0; lp < M; ++lp)
                h11 += Tdd(l, lp) * S0(l, lp) -
                       0.5 * alpha * (Tdc(l, lp) + Tdc(lp, l)) * S1(l, lp) +
                       0.25 * alpha * alpha * Tcc(l, lp) * S2(l, lp);
        H(0, 0) = h11;
    }

    // --- Gram of K_D at the centers
    Mat G(Q, Q);
    for (int l = 0; l < Q; ++l)
        for (int lp = 0; lp <= l; ++lp) {
            double v = kernel->value(centers[l], centers[lp]);
            G(l, lp) = v;
            G(lp, l) = v;
        }

    QuadraticProgram qp;
    qp.H = 0.5 * (H + H.transpose());
    qp.gram = std::move(G);
    qp.Q = Q;
    qp.n = n;
    qp.lambda = lambda;
    qp.provenance = {{"space_panels", panels},
                     {"space_order", cfg.space_order},
                     {"time_panels", static_cast<int>(panels_t.size())},
                     {"time_rel_tol", cfg.time_rel_tol},
                     {"box_halfwidth", r_star},
                     {"closed_form_qq", cfg.closed_form_qq},
                     {"alpha", alpha}};
    return qp;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

void write_matrix_blob(const std::string& path, const Mat& m) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ConfigError("QuadraticProgram: cannot write " + path);
    std::int64_t rows = m.rows(), cols = m.cols();
    std::fwrite(&rows, sizeof(rows), 1, f);
    std::fwrite(&cols, sizeof(cols), 1, f);
    std::fwrite(m.data(), sizeof(double), static_cast<std::size_t>(rows * cols), f);
    std::fclose(f);
}

Mat read_matrix_blob(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw ConfigError("QuadraticProgram: cannot read " + path);
    std::int64_t rows = 0, cols = 0;
    if (std::fread(&rows, sizeof(rows), 1, f) != 1 || std::fread(&cols, sizeof(cols), 1, f) != 1) {
        std::fclose(f);
        throw ConfigError("QuadraticProgram: truncated blob " + path);
    }
    Mat m(rows, cols);
    std::size_t want = static_cast<std::size_t>(rows * cols);
    std::size_t got = std::fread(m.data(), sizeof(double), want, f);
    std::fclose(f);
    if (got != want) throw ConfigError("QuadraticProgram: truncated blob " + path);
    return m;
}

}  // namespace

void QuadraticProgram::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json j;
    j["Q"] = Q;
    j["n"] = n;
    j["lambda"] = lambda;
    j["dim"] = dim();
    j["vec_convention"] = "column-major";
    j["H_blob"] = "H.bin";
    j["gram_blob"] = "gram.bin";
    j["provenance"] = provenance;
    std::ofstream out(dir + "/qp.json");
    if (!out) throw ConfigError("QuadraticProgram: cannot write qp.json");
    out << j.dump(2) << "\n";
    write_matrix_blob(dir + "/H.bin", H);
    write_matrix_blob(dir + "/gram.bin", gram);
}

QuadraticProgram QuadraticProgram::load(const std::string& dir) {
    std::ifstream in(dir + "/qp.json");
    if (!in) throw ConfigError("QuadraticProgram: missing qp.json in " + dir);
    nlohmann::json j = nlohmann::json::parse(in);
    QuadraticProgram qp;
    qp.Q = j.at("Q").get<int>();
    qp.n = j.at("n").get<int>();
    qp.lambda = j.at("lambda").get<double>();
    qp.provenance = j.value("provenance", nlohmann::json::object());
    qp.H = read_matrix_blob(dir + "/" + j.at("H_blob").get<std::string>());
    qp.gram = read_matrix_blob(dir + "/" + j.at("gram_blob").get<std::string>());
    if (qp.H.rows() != qp.dim() || qp.H.cols() != qp.dim())
        throw ConfigError("QuadraticProgram: H dimension mismatch");
    if (qp.gram.rows() != qp.Q || qp.gram.cols() != qp.Q)
        throw ConfigError("QuadraticProgram: gram dimension mismatch");
    return qp;
}

}  // namespace fokkerfit
