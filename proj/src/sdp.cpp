#include "fokkerfit/sdp.hpp"

#include <cmath>
#include <fstream>

namespace fokkerfit {

Mat project_psd(const Mat& A) {
    Mat S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    Vec lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

struct Problem {
    const QuadraticProgram& qp;
    Mat gxi;    // (G x I_n), dense Qn x Qn
    Mat gxi_A;  // preconditioned trace pairing for A
    Mat gxi_B;  // preconditioned quadratic form for B
    int qn;

    explicit Problem(const QuadraticProgram& q) : qp(q), qn(q.qn()) {
        gxi = Mat::Zero(qn, qn);
        for (int l = 0; l < q.Q; ++l)
            for (int lp = 0; lp < q.Q; ++lp)
                gxi.block(l * q.n, lp * q.n, q.n, q.n) =
                    q.gram(l, lp) * Mat::Identity(q.n, q.n);
        gxi_A = gxi;
        gxi_B = gxi;
    }

    Vec pack(const Mat& A, const Vec& B) const {
        Vec v(qp.dim());
        v(0) = 1.0;
        v.segment(1, qn) = B;
        v.segment(1 + qn, qn * qn) = Eigen::Map<const Vec>(A.data(), qn * qn);
        return v;
    }

    double value(const Vec& v) const {
        double quad = v.dot(qp.H * v);
        auto B = v.segment(1, qn);
        auto vecA = v.segment(1 + qn, qn * qn);
        Eigen::Map<const Mat> A(vecA.data(), qn, qn);
        double reg = (gxi_A.array() * A.array()).sum() + B.dot(gxi_B * B);
        return quad + qp.lambda * reg;
    }

    /// Gradient over (B, vecA); the leading coordinate stays pinned at 1.
    Vec gradient(const Vec& v) const {
        Vec g = 2.0 * (qp.H * v);
        g(0) = 0.0;
        g.segment(1, qn) += 2.0 * qp.lambda * (gxi_B * v.segment(1, qn));
        g.segment(1 + qn, qn * qn) +=
            qp.lambda * Eigen::Map<const Vec>(gxi_A.data(), qn * qn);
        return g;
    }

    /// Projection of the (B, vecA) part: B free, A onto the PSD cone.
    Vec project(const Vec& v) const {
        Vec out = v;
        out(0) = 1.0;
        Eigen::Map<const Mat> A(v.data() + 1 + qn, qn, qn);
        Mat Ap = project_psd(A);
        out.segment(1 + qn, qn * qn) = Eigen::Map<const Vec>(Ap.data(), qn * qn);
        return out;
    }
};

double estimate_h_norm(const Mat& H) {
    Vec x = Vec::Ones(H.rows());
    x.normalize();
    double lam = 0.0;
    for (int it = 0; it < 30; ++it) {
        Vec y = H * x;
        double ny = y.norm();
        if (ny == 0.0) return 0.0;
        lam = ny;
        x = y / ny;
    }
    return lam;
}

}  // namespace

SolveReport solve(const QuadraticProgram& qp, const SolveOptions& opts) {
    if ((qp.H - qp.H.transpose()).norm() > 1e-10 * std::max(1.0, qp.H.norm()))
        throw NumericalError("solve: H is not symmetric");
    if (qp.lambda < 0.0) throw ConfigError("solve: lambda >= 0 required");

    // Diagonal preconditioning. B coordinates rescale freely; A rescales by a
    // congruence A = D A~ D, which maps the PSD cone onto itself, so the
    // projection step stays exact in the scaled variables.
    const int qn_pre = qp.qn();
    Vec dB = Vec::Ones(qn_pre), dA = Vec::Ones(qn_pre);
    {
        double href = 0.0;
        for (int i = 0; i < qp.dim(); ++i) href = std::max(href, qp.H(i, i));
        if (href > 0.0) {
            for (int i = 0; i < qn_pre; ++i) {
                double hb = qp.H(1 + i, 1 + i);
                if (hb > 1e-12 * href) dB(i) = 1.0 / std::sqrt(hb);
                double ha = qp.H(1 + qn_pre + i * qn_pre + i, 1 + qn_pre + i * qn_pre + i);
                if (ha > 1e-12 * href) dA(i) = 1.0 / std::sqrt(std::sqrt(ha));
            }
        }
    }
    QuadraticProgram scaled = qp;
    {
        Vec t(qp.dim());
        t(0) = 1.0;
        t.segment(1, qn_pre) = dB;
        for (int r = 0; r < qn_pre; ++r)
            for (int c = 0; c < qn_pre; ++c) t(1 + qn_pre + c * qn_pre + r) = dA(r) * dA(c);
        scaled.H = t.asDiagonal() * qp.H * t.asDiagonal();
        // regularizer: tr((GxI) DAD) and (SB)^T (GxI) (SB) absorb into gram-
        // weighted forms; keep them exact by scaling the gram blocks per
        // coordinate pair inside the solve loop instead.
        scaled.gram = qp.gram;
    }

    Problem prob(scaled);
    // exact scaled regularizer: gxi entries pick up dA/dB factors
    {
        Mat gxiA = prob.gxi, gxiB = prob.gxi;
        for (int r = 0; r < qn_pre; ++r)
            for (int c = 0; c < qn_pre; ++c) {
                gxiA(r, c) *= dA(r) * dA(c);
                gxiB(r, c) *= dB(r) * dB(c);
            }
        prob.gxi_A = gxiA;
        prob.gxi_B = gxiB;
    }
    const int qn = prob.qn;
    const double hnorm = estimate_h_norm(scaled.H);
    const double grad_tol = opts.grad_tol * (1.0 + hnorm);

    // Lipschitz seed: 2||H|| plus the regularizer curvature in B.
    double L = 2.0 * hnorm + 2.0 * qp.lambda * estimate_h_norm(prob.gxi_B) + 1e-12;
    double step = 1.0 / L;

    Vec x = prob.pack(Mat::Zero(qn, qn), Vec::Zero(qn));
    Vec y = x;
    double fx = prob.value(x);
    double t_momentum = 1.0;

    SolveReport report;
    report.h_norm = hnorm;
    report.trajectory.push_back(fx);

    int it = 0;
    std::string reason = "max-iter";
    for (; it < opts.max_iters; ++it) {
        Vec gy = prob.gradient(y);
        double fy = prob.value(y);

        Vec xn;
        for (;;) {
            xn = prob.project(y - step * gy);
            if (!xn.allFinite())
                throw NumericalError("solve: non-finite iterate (corrupt assembly?)");
            Vec d = xn - y;
            double fxn = prob.value(xn);
            if (fxn <= fy + gy.dot(d) + 0.5 / step * d.squaredNorm() + 1e-14 * std::abs(fy))
                break;
            step *= 0.5;
            if (step < 1e-18 / (1.0 + L)) throw NumericalError("solve: line search underflow");
        }
        double fxn = prob.value(xn);

        if (fxn > fx) {
            // Momentum overshoot: restart from the last accepted iterate.
            t_momentum = 1.0;
            y = x;
            Vec gx = prob.gradient(x);
            xn = prob.project(x - step * gx);
            fxn = prob.value(xn);
            while (fxn > fx + 1e-14 * std::abs(fx)) {
                step *= 0.5;
                if (step < 1e-18 / (1.0 + L)) break;
                xn = prob.project(x - step * gx);
                fxn = prob.value(xn);
            }
            if (fxn > fx) {
                reason = "stall";
                ++it;
                break;
            }
        }

        // Projected-gradient optimality measure at the accepted iterate.
        Vec gx = prob.gradient(xn);
        Vec pg = (xn - prob.project(xn - step * gx)) / step;
        double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        y = xn + ((t_momentum - 1.0) / tnext) * (xn - x);
        y(0) = 1.0;
        t_momentum = tnext;

        x = xn;
        fx = fxn;
        report.trajectory.push_back(fx);

        if (pg.norm() <= grad_tol) {
            reason = "gradient-tol";
            ++it;
            break;
        }
        if (static_cast<int>(report.trajectory.size()) > opts.stall_window) {
            std::size_t k = report.trajectory.size();
            if (report.trajectory[k - opts.stall_window - 1] - fx <=
                opts.stall_tol * (1.0 + std::abs(fx))) {
                reason = "stall";
                ++it;
                break;
            }
        }
    }

    report.iterations = it;
    report.termination = reason;
    // map the preconditioned solution back: B = S B~, A = D A~ D
    report.B = dB.asDiagonal() * x.segment(1, qn);
    Mat Atil = Eigen::Map<const Mat>(x.data() + 1 + qn, qn, qn);
    report.A = dA.asDiagonal() * Atil * dA.asDiagonal();
    report.A = 0.5 * (report.A + report.A.transpose()).eval();
    report.objective = fx;
    Eigen::SelfAdjointEigenSolver<Mat> es(report.A);
    report.psd_residual = es.eigenvalues().minCoeff();
    return report;
}

void SolveReport::save(const std::string& path) const {
    nlohmann::json j;
    j["objective"] = objective;
    j["iterations"] = iterations;
    j["termination"] = termination;
    j["psd_residual"] = psd_residual;
    j["h_norm"] = h_norm;
    const int qn = static_cast<int>(B.size());
    std::vector<double> aflat;
    for (int r = 0; r < qn; ++r)
        for (int c = 0; c < qn; ++c) aflat.push_back(A(r, c));
    j["A"] = aflat;  // row-major
    j["B"] = std::vector<double>(B.data(), B.data() + B.size());
    int stride = std::max<int>(1, static_cast<int>(trajectory.size()) / 1000);
    std::vector<double> thin;
    for (std::size_t k = 0; k < trajectory.size(); k += stride) thin.push_back(trajectory[k]);
    if (!trajectory.empty() && (trajectory.size() - 1) % stride != 0)
        thin.push_back(trajectory.back());
    j["objective_trajectory"] = thin;
    j["trajectory_stride"] = stride;
    std::ofstream out(path);
    if (!out) throw ConfigError("SolveReport: cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace fokkerfit
