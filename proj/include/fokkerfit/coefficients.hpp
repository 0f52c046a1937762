#ifndef FOKKERFIT_COEFFICIENTS_HPP
#define FOKKERFIT_COEFFICIENTS_HPP

#include <memory>
#include <string>
#include <vector>

#include "fokkerfit/common.hpp"
#include "fokkerfit/cutoff.hpp"
#include "fokkerfit/kernels.hpp"

namespace fokkerfit {

/// Spatial derivatives of a diffusion matrix: d1[k](i,j) = da_ij/dy_k,
/// d2[k][l](i,j) = d2 a_ij / dy_k dy_l.
struct AJet {
    Mat value;
    std::vector<Mat> d1;
    std::vector<std::vector<Mat>> d2;
};

/// Drift value and Jacobian: d1(i,k) = db_i/dy_k.
struct BJet {
    Vec value;
    Mat d1;
};

/// Evaluable drift/diffusion pair with the spatial derivatives the dual
/// generator consumes (a up to order 2, b up to order 1). Implementations
/// are immutable and safe to share across threads.
class CoefficientField {
public:
    virtual ~CoefficientField() = default;

    virtual int dim() const = 0;
    /// Radius outside which both coefficients vanish; +inf when unbounded.
    virtual double support_radius() const = 0;
    virtual bool constant_in_state() const { return false; }

    virtual Mat a(double t, const Vec& y) const = 0;
    virtual Vec b(double t, const Vec& y) const = 0;
    virtual AJet a_jet(double t, const Vec& y) const = 0;
    virtual BJet b_jet(double t, const Vec& y) const = 0;

    /// Batch evaluation at fixed t over columns of `ys` (n x P). Returns the
    /// flattened diffusion (n*n x P, column-major per point) and drift
    /// (n x P). Overridden where a faster bulk path exists.
    virtual Mat a_batch(double t, const Mat& ys) const;
    virtual Mat b_batch(double t, const Mat& ys) const;
};

using FieldPtr = std::shared_ptr<const CoefficientField>;

/// Ornstein-Uhlenbeck test family, compactly supported through a polynomial
/// cutoff: b = -theta y chi(y), a = sigma2 chi(y) I, with chi = 1 on
/// ||y|| <= r_star - 1 and 0 outside ||y|| >= r_star.
FieldPtr ou_field(double theta, double sigma2, int n, double r_star = 10.0);

/// Constant coefficients (mainly for tests and benchmarks).
FieldPtr const_field(Mat a, Vec b);

/// a + alpha I, guaranteed symmetric positive definite.
class RegularizedDiffusion {
public:
    RegularizedDiffusion(FieldPtr base, double alpha) : base_(std::move(base)), alpha_(alpha) {
        if (alpha <= 0.0) throw ConfigError("RegularizedDiffusion: alpha > 0 required");
    }

    double alpha() const { return alpha_; }
    const CoefficientField& base() const { return *base_; }

    Mat evaluate(double t, const Vec& y) const {
        Mat m = base_->a(t, y);
        m.diagonal().array() += alpha_;
        return m;
    }

    /// Symmetric PSD square root of a + alpha I via spectral decomposition.
    Mat sqrt(double t, const Vec& y) const;

private:
    FieldPtr base_;
    double alpha_;
};

Mat sqrt_psd(const Mat& m);

/// Finite-dimensional learned coefficients:
///   a(t,y) = Phi_Q(t,y) A Phi_Q(t,y)^T,  b(t,y) = Phi_Q(t,y) B,
/// with Phi_Q built from the windowed space-time kernel at Q centers. Both
/// vanish identically outside D.
class LearnedCoefficients : public CoefficientField {
public:
    LearnedCoefficients(std::vector<STPoint> centers, Mat A, Vec B,
                        std::shared_ptr<const WindowedSpaceTimeKernel> kernel, double alpha,
                        bool alpha_floor = false);

    int dim() const override { return n_; }
    double support_radius() const override;
    Mat a(double t, const Vec& y) const override;
    Vec b(double t, const Vec& y) const override;
    AJet a_jet(double t, const Vec& y) const override;
    BJet b_jet(double t, const Vec& y) const override;
    Mat a_batch(double t, const Mat& ys) const override;
    Mat b_batch(double t, const Mat& ys) const override;

    int num_centers() const { return static_cast<int>(centers_.size()); }
    const std::vector<STPoint>& centers() const { return centers_; }
    const Mat& A() const { return A_; }
    const Vec& B() const { return B_; }
    double alpha() const { return alpha_; }
    bool alpha_floor() const { return alpha_floor_; }
    const WindowedSpaceTimeKernel& kernel() const { return *kernel_; }
    std::shared_ptr<const WindowedSpaceTimeKernel> kernel_ptr() const { return kernel_; }

    std::string to_json() const;
    static LearnedCoefficients from_json(const std::string& text);
    void save(const std::string& path) const;
    static LearnedCoefficients load(const std::string& path);

private:
    std::vector<STPoint> centers_;
    Mat A_;
    Vec B_;
    std::shared_ptr<const WindowedSpaceTimeKernel> kernel_;
    double alpha_;
    bool alpha_floor_;
    int n_;
    std::unique_ptr<RadialBump> floor_bump_;
};

}  // namespace fokkerfit

#endif
