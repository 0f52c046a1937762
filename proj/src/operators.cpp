#include "fokkerfit/operators.hpp"

namespace fokkerfit {

double apply_generator(const CoefficientField& field, double alpha, const ScalarJet& phi, double t,
                       const Vec& y) {
    Mat a = field.a(t, y);
    a.diagonal().array() += alpha;
    return 0.5 * (a.array() * phi.hess.array()).sum() + field.b(t, y).dot(phi.grad);
}

double apply_generator(const GeneratorContext& ctx, const ScalarField& phi, double t,
                       const Vec& y) {
    return apply_generator(*ctx.coefficients, ctx.alpha, phi(t, y), t, y);
}

double apply_dual(const CoefficientField& field, double alpha, const ScalarJet& u, double t,
                  const Vec& y) {
    const int n = field.dim();
    AJet aj = field.a_jet(t, y);
    BJet bj = field.b_jet(t, y);

    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double aij = aj.value(i, j) + (i == j ? alpha : 0.0);
            acc += 0.5 * (aij * u.hess(i, j) + aj.d1[j](i, j) * u.grad(i) +
                          aj.d1[i](i, j) * u.grad(j) + u.value * aj.d2[i][j](i, j));
        }
        acc -= bj.value(i) * u.grad(i) + u.value * bj.d1(i, i);
    }
    return acc;
}

double apply_dual(const GeneratorContext& ctx, const ScalarField& u, double t, const Vec& y) {
    return apply_dual(*ctx.coefficients, ctx.alpha, u(t, y), t, y);
}

double apply_dual_to_density(const GeneratorContext& ctx, double t, const Vec& y) {
    DensityModel::Jet pj = ctx.density->jet(t, y);
    ScalarJet u{pj.value, pj.grad, pj.hess};
    return apply_dual(*ctx.coefficients, ctx.alpha, u, t, y);
}

// ---------------------------------------------------------------------------
// features

FeatureAssembler::FeatureAssembler(std::shared_ptr<const DensityModel> density,
                                   std::vector<STPoint> centers,
                                   std::shared_ptr<const WindowedSpaceTimeKernel> kernel,
                                   double alpha)
    : density_(std::move(density)),
      centers_(std::move(centers)),
      kernel_(std::move(kernel)),
      alpha_(alpha) {
    if (centers_.empty()) throw ConfigError("FeatureAssembler: empty center set");
    if (static_cast<int>(centers_.front().x.size()) != density_->dim())
        throw ConfigError("FeatureAssembler: center dimension mismatch");
}

FeatureEval FeatureAssembler::features(double t, const Vec& y) const {
    const int n = dim();
    const int Q = num_centers();
    DensityModel::Jet pj = density_->jet(t, y);

    FeatureEval out;
    out.r = 0.5 * alpha_ * pj.laplacian();
    out.qtilde = pj.dt - out.r;
    out.U = Eigen::RowVectorXd::Zero(Q * n);
    out.V = Mat::Zero(Q * n, Q * n);

    std::vector<WindowedSpaceTimeKernel::Jet2> kj(Q);
    STPoint z{t, y};
    for (int l = 0; l < Q; ++l) kj[l] = kernel_->jet2(z, centers_[l]);

    for (int l = 0; l < Q; ++l)
        for (int i = 0; i < n; ++i)
            out.U(l * n + i) = pj.grad(i) * kj[l].value + pj.value * kj[l].grad_y(i);

    for (int l = 0; l < Q; ++l) {
        for (int lp = l; lp < Q; ++lp) {
            const auto& f = kj[l];
            const auto& g = kj[lp];
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    double Fi = f.grad_y(i) * g.value + f.value * g.grad_y(i);
                    double Fj = f.grad_y(j) * g.value + f.value * g.grad_y(j);
                    double Fij = f.hess_y(i, j) * g.value + f.grad_y(i) * g.grad_y(j) +
                                 f.grad_y(j) * g.grad_y(i) + f.value * g.hess_y(i, j);
                    double v = 0.5 * (pj.hess(i, j) * f.value * g.value + pj.grad(i) * Fj +
                                      pj.grad(j) * Fi + pj.value * Fij);
                    out.V(l * n + i, lp * n + j) = v;
                    out.V(lp * n + j, l * n + i) = v;
                }
            }
        }
    }
    return out;
}

void FeatureAssembler::weight_vector(double t, const Vec& y, Vec& w) const {
    weight_vector_with_jet(density_->jet(t, y), t, y, w);
}

void FeatureAssembler::weight_vector_with_jet(const DensityModel::Jet& pj, double t, const Vec& y,
                                              Vec& w) const {
    const int n = dim();
    const int Q = num_centers();
    const int qn = Q * n;
    w.resize(vector_size());

    double r = 0.5 * alpha_ * pj.hess.trace();
    w(0) = pj.dt - r;

    std::vector<WindowedSpaceTimeKernel::Jet2> kj(Q);
    STPoint z{t, y};
    for (int l = 0; l < Q; ++l) kj[l] = kernel_->jet2(z, centers_[l]);

    for (int l = 0; l < Q; ++l)
        for (int i = 0; i < n; ++i)
            w(1 + l * n + i) = pj.grad(i) * kj[l].value + pj.value * kj[l].grad_y(i);

    // -vec(V), column-major over the Qn x Qn matrix
    double* vv = w.data() + 1 + qn;
    for (int cp = 0; cp < qn; ++cp) {
        int lp = cp / n, j = cp % n;
        const auto& g = kj[lp];
        for (int cr = 0; cr < qn; ++cr) {
            int l = cr / n, i = cr % n;
            const auto& f = kj[l];
            double Fi = f.grad_y(i) * g.value + f.value * g.grad_y(i);
            double Fj = f.grad_y(j) * g.value + f.value * g.grad_y(j);
            double Fij = f.hess_y(i, j) * g.value + f.grad_y(i) * g.grad_y(j) +
                         f.grad_y(j) * g.grad_y(i) + f.value * g.hess_y(i, j);
            double v = 0.5 * (pj.hess(i, j) * f.value * g.value + pj.grad(i) * Fj +
                              pj.grad(j) * Fi + pj.value * Fij);
            vv[static_cast<std::ptrdiff_t>(cp) * qn + cr] = -v;
        }
    }
}

}  // namespace fokkerfit
