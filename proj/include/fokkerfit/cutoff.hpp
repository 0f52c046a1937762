#ifndef FOKKERFIT_CUTOFF_HPP
#define FOKKERFIT_CUTOFF_HPP

#include <cmath>

#include "fokkerfit/common.hpp"

namespace fokkerfit {

/// Radial polynomial bump: 1 on ||y|| <= outer - width, 0 on ||y|| >= outer,
/// profile (1 - s^2)^3 on the transition annulus. Vanishes together with its
/// first two radial derivatives at the outer radius.
class RadialBump {
public:
    RadialBump(double outer, double width = 1.0) : outer_(outer), width_(width) {
        if (outer <= 0.0 || width <= 0.0 || width > outer)
            throw ConfigError("RadialBump: need 0 < width <= outer");
    }

    double outer() const { return outer_; }
    double width() const { return width_; }
    double inner() const { return outer_ - width_; }

    double value(double s) const {
        double u = (s - inner()) / width_;
        if (u <= 0.0) return 1.0;
        if (u >= 1.0) return 0.0;
        double q = 1.0 - u * u;
        return q * q * q;
    }

    double d1(double s) const {
        double u = (s - inner()) / width_;
        if (u <= 0.0 || u >= 1.0) return 0.0;
        double q = 1.0 - u * u;
        return -6.0 * u * q * q / width_;
    }

    double d2(double s) const {
        double u = (s - inner()) / width_;
        if (u <= 0.0 || u >= 1.0) return 0.0;
        double q = 1.0 - u * u;
        return (-6.0 * q * q + 24.0 * u * u * q) / (width_ * width_);
    }

    double value_at(const Vec& y) const { return value(y.norm()); }

    Vec grad_at(const Vec& y) const {
        double s = y.norm();
        double g = d1(s);
        if (g == 0.0) return Vec::Zero(y.size());
        return (g / s) * y;
    }

    Mat hess_at(const Vec& y) const {
        int n = static_cast<int>(y.size());
        double s = y.norm();
        double g1 = d1(s), g2 = d2(s);
        if (g1 == 0.0 && g2 == 0.0) return Mat::Zero(n, n);
        Vec dir = y / s;
        return g2 * (dir * dir.transpose()) +
               (g1 / s) * (Mat::Identity(n, n) - dir * dir.transpose());
    }

private:
    double outer_;
    double width_;
};

}  // namespace fokkerfit

#endif
