#ifndef FOKKERFIT_OPERATORS_HPP
#define FOKKERFIT_OPERATORS_HPP

#include <functional>
#include <memory>

#include "fokkerfit/coefficients.hpp"
#include "fokkerfit/density.hpp"

namespace fokkerfit {

/// Pointwise data of a twice differentiable scalar field.
struct ScalarJet {
    double value = 0.0;
    Vec grad;
    Mat hess;
};

using ScalarField = std::function<ScalarJet(double, const Vec&)>;

/// Coefficients plus the density model they act on.
struct GeneratorContext {
    FieldPtr coefficients;
    double alpha = 0.0;
    std::shared_ptr<const DensityModel> density;
};

/// Kolmogorov generator:
///   L phi = 1/2 sum_ij (a + alpha I)_ij d2_ij phi + sum_i b_i d_i phi.
double apply_generator(const GeneratorContext& ctx, const ScalarField& phi, double t, const Vec& y);
double apply_generator(const CoefficientField& field, double alpha, const ScalarJet& phi, double t,
                       const Vec& y);

/// Dual of the generator in divergence form, expanded by the product rule:
///   L* u = 1/2 sum_ij d2_ij((a + alpha I)_ij u) - sum_i d_i(b_i u).
double apply_dual(const GeneratorContext& ctx, const ScalarField& u, double t, const Vec& y);
double apply_dual(const CoefficientField& field, double alpha, const ScalarJet& u, double t,
                  const Vec& y);

/// Dual operator applied to the context's density model.
double apply_dual_to_density(const GeneratorContext& ctx, double t, const Vec& y);

/// Feature functions of the finite-dimensional residual at one point:
///   dt p - L* p = qtilde - tr(V A) + U B.
struct FeatureEval {
    Eigen::RowVectorXd U;  // 1 x Qn
    Mat V;                 // Qn x Qn, symmetric
    double r = 0.0;        // (alpha/2) laplacian(p)
    double qtilde = 0.0;   // dt p - r
};

/// Evaluates U, V, r, qtilde for a fixed center set and kernel against a
/// density model. Pure and re-entrant.
class FeatureAssembler {
public:
    FeatureAssembler(std::shared_ptr<const DensityModel> density, std::vector<STPoint> centers,
                     std::shared_ptr<const WindowedSpaceTimeKernel> kernel, double alpha);

    int num_centers() const { return static_cast<int>(centers_.size()); }
    int dim() const { return density_->dim(); }
    /// Length of the weight vector (1, B-block, vec(A)-block).
    int vector_size() const {
        int qn = num_centers() * dim();
        return 1 + qn + qn * qn;
    }
    const std::vector<STPoint>& centers() const { return centers_; }
    std::shared_ptr<const WindowedSpaceTimeKernel> kernel() const { return kernel_; }
    std::shared_ptr<const DensityModel> density() const { return density_; }
    double alpha() const { return alpha_; }

    FeatureEval features(double t, const Vec& y) const;

    /// Writes w(t,y) = (qtilde, U, -vec(V)) into `w` (resized as needed), so
    /// that w . (1, B, vec(A)) equals the residual dt p - L* p. vec is
    /// column-major over the Qn x Qn block matrix.
    void weight_vector(double t, const Vec& y, Vec& w) const;

    /// Same, reusing a precomputed density jet (for quadrature loops that
    /// cache space slices).
    void weight_vector_with_jet(const DensityModel::Jet& pj, double t, const Vec& y, Vec& w) const;

private:
    std::shared_ptr<const DensityModel> density_;
    std::vector<STPoint> centers_;
    std::shared_ptr<const WindowedSpaceTimeKernel> kernel_;
    double alpha_;
};

}  // namespace fokkerfit

#endif
