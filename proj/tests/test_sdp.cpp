#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fokkerfit/sdp.hpp"

using namespace fokkerfit;

namespace {

Mat random_sym(Rng& rng, int n) {
    Mat m(n, n);
    for (int i = 0; i < n * n; ++i) m(i / n, i % n) = rng.normal();
    return 0.5 * (m + m.transpose());
}

Mat random_psd(Rng& rng, int n) {
    Mat f(n, n);
    for (int i = 0; i < n * n; ++i) f(i / n, i % n) = rng.normal();
    return f * f.transpose();
}

// Quadratic program with a hand-built H over (1, B, vec(A)).
QuadraticProgram synthetic_qp(Mat H, int Q, int n, double lambda, Mat gram) {
    QuadraticProgram qp;
    qp.H = std::move(H);
    qp.Q = Q;
    qp.n = n;
    qp.lambda = lambda;
    qp.gram = std::move(gram);
    return qp;
}

}  // namespace

TEST_CASE("psd projection: idempotence, clipping, nearest point") {
    Rng rng(3);
    Mat p = random_psd(rng, 4);
    CHECK((project_psd(p) - p).norm() <= 1e-12 * (p.norm() + 1.0));

    Mat d = Vec::Zero(2).asDiagonal();
    d(0, 0) = 1.0;
    d(1, 1) = -2.0;
    Mat clipped = project_psd(d);
    CHECK(clipped(0, 0) == doctest::Approx(1.0));
    CHECK(clipped(1, 1) == doctest::Approx(0.0));
    CHECK(std::abs(clipped(0, 1)) <= 1e-14);

    // Frobenius-nearest against random PSD competitors
    Mat s = random_sym(rng, 3);
    Mat proj = project_psd(s);
    double best = (s - proj).norm();
    for (int trial = 0; trial < 100; ++trial) {
        Mat other = random_psd(rng, 3);
        CHECK(best <= (s - other).norm() + 1e-12);
    }
}

TEST_CASE("identity objective is minimized at the origin") {
    const int Q = 3, n = 1, dim = 1 + 3 + 9;
    QuadraticProgram qp = synthetic_qp(Mat::Identity(dim, dim), Q, n, 0.0, Mat::Zero(Q, Q));
    SolveReport rep = solve(qp);
    CHECK(rep.A.norm() <= 1e-8);
    CHECK(rep.B.norm() <= 1e-8);
    CHECK(rep.objective == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rep.termination == "gradient-tol");
}

TEST_CASE("planted optimum is recovered to 1e-8 objective gap") {
    Rng rng(17);
    const int Q = 3, n = 1, qn = Q * n, dim = 1 + qn + qn * qn;
    Mat Astar = random_psd(rng, qn);
    Vec Bstar(qn);
    for (int i = 0; i < qn; ++i) Bstar(i) = rng.normal();
    Vec ustar(qn + qn * qn);
    ustar.head(qn) = Bstar;
    ustar.tail(qn * qn) = Eigen::Map<const Vec>(Astar.data(), qn * qn);

    Mat H = Mat::Identity(dim, dim);
    H(0, 0) = ustar.squaredNorm() + 1.0;
    H.block(0, 1, 1, dim - 1) = -ustar.transpose();
    H.block(1, 0, dim - 1, 1) = -ustar;

    // direct linear-system oracle for the unconstrained minimizer
    Mat Huu = H.block(1, 1, dim - 1, dim - 1);
    Vec hu1 = H.block(1, 0, dim - 1, 1);
    Vec u_oracle = Huu.ldlt().solve(-hu1);
    CHECK((u_oracle - ustar).norm() <= 1e-10);
    Vec v(dim);
    v(0) = 1.0;
    v.tail(dim - 1) = u_oracle;
    double obj_oracle = v.dot(H * v);

    QuadraticProgram qp = synthetic_qp(H, Q, n, 0.0, Mat::Zero(Q, Q));
    SolveReport rep = solve(qp);
    CHECK(rep.objective <= obj_oracle + 1e-8);
    CHECK(rep.objective >= obj_oracle - 1e-8);
    CHECK((rep.B - Bstar).norm() <= 1e-4);
    CHECK(rep.psd_residual >= -1e-8 * (rep.A.norm() + 1.0));
}

TEST_CASE("objective trajectory never increases") {
    Rng rng(23);
    const int Q = 2, n = 2, qn = 4, dim = 1 + qn + qn * qn;
    Mat Z(dim, dim + 4);
    for (int i = 0; i < Z.size(); ++i) Z(i % dim, i / dim) = rng.normal();
    Mat H = Z * Z.transpose() / dim;
    QuadraticProgram qp = synthetic_qp(H, Q, n, 0.05, random_psd(rng, Q));
    SolveReport rep = solve(qp);
    for (std::size_t k = 1; k < rep.trajectory.size(); ++k)
        CHECK(rep.trajectory[k] <= rep.trajectory[k - 1] + 1e-12 * (1.0 + std::abs(rep.trajectory[k])));
}

TEST_CASE("KKT stationarity holds at termination") {
    Rng rng(29);
    const int Q = 3, n = 1, qn = 3, dim = 1 + qn + qn * qn;
    Mat Z(dim, dim + 2);
    for (int i = 0; i < Z.size(); ++i) Z(i % dim, i / dim) = rng.normal();
    Mat H = Z * Z.transpose() / dim;
    Mat gram = random_psd(rng, Q) + Mat::Identity(Q, Q);
    QuadraticProgram qp = synthetic_qp(H, Q, n, 0.02, gram);
    SolveReport rep = solve(qp);

    // gradient of the full objective at the solution
    Vec v(dim);
    v(0) = 1.0;
    v.segment(1, qn) = rep.B;
    v.segment(1 + qn, qn * qn) = Eigen::Map<const Vec>(rep.A.data(), qn * qn);
    Vec g = 2.0 * (qp.H * v);
    Mat gxi = Mat::Zero(qn, qn);
    for (int l = 0; l < Q; ++l)
        for (int lp = 0; lp < Q; ++lp)
            gxi.block(l * n, lp * n, n, n) = gram(l, lp) * Mat::Identity(n, n);
    Vec gB = g.segment(1, qn) + 2.0 * qp.lambda * (gxi * rep.B);
    Mat gA = Eigen::Map<const Mat>(g.data() + 1 + qn, qn, qn);
    gA += qp.lambda * gxi;
    gA = 0.5 * (gA + gA.transpose()).eval();

    double hnorm = rep.h_norm;
    CHECK(gB.norm() <= 1e-6 * (1.0 + hnorm));
    for (int trial = 0; trial < 50; ++trial) {
        Mat D = random_psd(rng, qn);
        D /= D.norm();
        CHECK((gA.array() * D.array()).sum() >= -1e-6 * (1.0 + hnorm));
    }
}

TEST_CASE("solve is deterministic") {
    Rng rng(31);
    const int Q = 2, n = 1, qn = 2, dim = 1 + qn + qn * qn;
    Mat Z(dim, dim);
    for (int i = 0; i < Z.size(); ++i) Z(i % dim, i / dim) = rng.normal();
    Mat H = Z * Z.transpose() / dim;
    QuadraticProgram qp = synthetic_qp(H, Q, n, 0.01, random_psd(rng, Q));
    SolveReport a = solve(qp);
    SolveReport b = solve(qp);
    CHECK((a.A - b.A).norm() == 0.0);
    CHECK((a.B - b.B).norm() == 0.0);
    CHECK(a.objective == b.objective);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("non-symmetric H is rejected") {
    const int dim = 1 + 2 + 4;
    Mat H = Mat::Identity(dim, dim);
    H(0, 1) = 0.5;  // asymmetric
    QuadraticProgram qp = synthetic_qp(H, 2, 1, 0.0, Mat::Zero(2, 2));
    CHECK_THROWS_AS(solve(qp), NumericalError);
}
