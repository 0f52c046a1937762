#include "fokkerfit/coefficients.hpp"

#include <fstream>
#include <limits>

#include <json.hpp>

namespace fokkerfit {

namespace {

AJet zero_ajet(int n) {
    AJet j;
    j.value = Mat::Zero(n, n);
    j.d1.assign(n, Mat::Zero(n, n));
    j.d2.assign(n, std::vector<Mat>(n, Mat::Zero(n, n)));
    return j;
}

}  // namespace

Mat CoefficientField::a_batch(double t, const Mat& ys) const {
    const int n = dim();
    const int P = static_cast<int>(ys.cols());
    Mat out(n * n, P);
    for (int p = 0; p < P; ++p) {
        Mat m = a(t, ys.col(p));
        out.col(p) = Eigen::Map<const Vec>(m.data(), n * n);
    }
    return out;
}

Mat CoefficientField::b_batch(double t, const Mat& ys) const {
    const int n = dim();
    const int P = static_cast<int>(ys.cols());
    Mat out(n, P);
    for (int p = 0; p < P; ++p) out.col(p) = b(t, ys.col(p));
    return out;
}

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck family with compact support

namespace {

class OuField : public CoefficientField {
public:
    OuField(double theta, double sigma2, int n, double r_star)
        : theta_(theta), sigma2_(sigma2), n_(n), bump_(r_star, 1.0) {
        if (theta < 0.0 || sigma2 < 0.0) throw ConfigError("ou_field: theta, sigma2 >= 0 required");
        if (n < 1) throw ConfigError("ou_field: n >= 1 required");
        if (r_star <= 1.0) throw ConfigError("ou_field: r_star > 1 required for the unit cutoff");
    }

    int dim() const override { return n_; }
    double support_radius() const override { return bump_.outer(); }

    Mat a(double, const Vec& y) const override {
        return sigma2_ * bump_.value_at(y) * Mat::Identity(n_, n_);
    }

    Vec b(double, const Vec& y) const override { return -theta_ * bump_.value_at(y) * y; }

    AJet a_jet(double, const Vec& y) const override {
        AJet j = zero_ajet(n_);
        double chi = bump_.value_at(y);
        Vec g = bump_.grad_at(y);
        Mat h = bump_.hess_at(y);
        j.value = sigma2_ * chi * Mat::Identity(n_, n_);
        for (int k = 0; k < n_; ++k) {
            j.d1[k] = sigma2_ * g(k) * Mat::Identity(n_, n_);
            for (int l = 0; l < n_; ++l) j.d2[k][l] = sigma2_ * h(k, l) * Mat::Identity(n_, n_);
        }
        return j;
    }

    BJet b_jet(double, const Vec& y) const override {
        BJet j;
        double chi = bump_.value_at(y);
        Vec g = bump_.grad_at(y);
        j.value = -theta_ * chi * y;
        j.d1 = -theta_ * (chi * Mat::Identity(n_, n_) + y * g.transpose());
        return j;
    }

private:
    double theta_;
    double sigma2_;
    int n_;
    RadialBump bump_;
};

class ConstField : public CoefficientField {
public:
    ConstField(Mat a, Vec b) : a_(std::move(a)), b_(std::move(b)) {
        if (a_.rows() != a_.cols() || a_.rows() != b_.size())
            throw ConfigError("const_field: dimension mismatch");
    }

    int dim() const override { return static_cast<int>(b_.size()); }
    double support_radius() const override { return std::numeric_limits<double>::infinity(); }
    bool constant_in_state() const override { return true; }

    Mat a(double, const Vec&) const override { return a_; }
    Vec b(double, const Vec&) const override { return b_; }

    AJet a_jet(double, const Vec&) const override {
        AJet j = zero_ajet(dim());
        j.value = a_;
        return j;
    }

    BJet b_jet(double, const Vec&) const override {
        BJet j;
        j.value = b_;
        j.d1 = Mat::Zero(dim(), dim());
        return j;
    }

private:
    Mat a_;
    Vec b_;
};

}  // namespace

FieldPtr ou_field(double theta, double sigma2, int n, double r_star) {
    return std::make_shared<OuField>(theta, sigma2, n, r_star);
}

FieldPtr const_field(Mat a, Vec b) { return std::make_shared<ConstField>(std::move(a), std::move(b)); }

// ---------------------------------------------------------------------------
// square roots

Mat sqrt_psd(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    Vec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Mat RegularizedDiffusion::sqrt(double t, const Vec& y) const { return sqrt_psd(evaluate(t, y)); }

// ---------------------------------------------------------------------------
// LearnedCoefficients

LearnedCoefficients::LearnedCoefficients(std::vector<STPoint> centers, Mat A, Vec B,
                                         std::shared_ptr<const WindowedSpaceTimeKernel> kernel,
                                         double alpha, bool alpha_floor)
    : centers_(std::move(centers)),
      A_(std::move(A)),
      B_(std::move(B)),
      kernel_(std::move(kernel)),
      alpha_(alpha),
      alpha_floor_(alpha_floor) {
    if (centers_.empty()) throw ConfigError("LearnedCoefficients: empty center set");
    n_ = static_cast<int>(centers_.front().x.size());
    const int Q = static_cast<int>(centers_.size());
    if (A_.rows() != Q * n_ || A_.cols() != Q * n_ || B_.size() != Q * n_)
        throw ConfigError("LearnedCoefficients: A/B dimensions inconsistent with Q*n");
    if ((A_ - A_.transpose()).norm() > 1e-8 * std::max(1.0, A_.norm()))
        throw ConfigError("LearnedCoefficients: A must be symmetric");
    A_ = 0.5 * (A_ + A_.transpose());
    if (alpha_floor_)
        floor_bump_ = std::make_unique<RadialBump>(kernel_->domain().r_star + 1.0, 1.0);
}

double LearnedCoefficients::support_radius() const {
    return alpha_floor_ ? kernel_->domain().r_star + 1.0 : kernel_->domain().r_star;
}

Mat LearnedCoefficients::a(double t, const Vec& y) const {
    const int Q = num_centers();
    Mat out = Mat::Zero(n_, n_);
    const SpaceTimeDomain& dom = kernel_->domain();
    if (t >= 0.0 && t <= dom.T && y.norm() <= dom.r_star) {
        STPoint z{t, y};
        Vec phi(Q);
        for (int l = 0; l < Q; ++l) phi(l) = kernel_->value(z, centers_[l]);
        for (int l = 0; l < Q; ++l) {
            if (phi(l) == 0.0) continue;
            for (int lp = 0; lp < Q; ++lp) {
                if (phi(lp) == 0.0) continue;
                out.noalias() += phi(l) * phi(lp) * A_.block(l * n_, lp * n_, n_, n_);
            }
        }
    }
    if (alpha_floor_) {
        double chi = floor_bump_->value_at(y);
        out = chi * out + (1.0 - chi) * alpha_ * Mat::Identity(n_, n_);
    }
    return out;
}

Vec LearnedCoefficients::b(double t, const Vec& y) const {
    const int Q = num_centers();
    Vec out = Vec::Zero(n_);
    const SpaceTimeDomain& dom = kernel_->domain();
    if (t < 0.0 || t > dom.T || y.norm() > dom.r_star) return out;
    STPoint z{t, y};
    for (int l = 0; l < Q; ++l) {
        double phi = kernel_->value(z, centers_[l]);
        if (phi != 0.0) out += phi * B_.segment(l * n_, n_);
    }
    return out;
}

AJet LearnedCoefficients::a_jet(double t, const Vec& y) const {
    const int Q = num_centers();
    AJet out = zero_ajet(n_);
    const SpaceTimeDomain& dom = kernel_->domain();
    bool inside = t >= 0.0 && t <= dom.T && y.norm() <= dom.r_star;
    if (inside) {
        STPoint z{t, y};
        std::vector<WindowedSpaceTimeKernel::Jet2> jets(Q);
        for (int l = 0; l < Q; ++l) jets[l] = kernel_->jet2(z, centers_[l]);
        for (int l = 0; l < Q; ++l) {
            for (int lp = 0; lp < Q; ++lp) {
                const auto& f = jets[l];
                const auto& g = jets[lp];
                if (f.value == 0.0 && f.grad_y.isZero() && g.value == 0.0 && g.grad_y.isZero())
                    continue;
                const Mat blk = A_.block(l * n_, lp * n_, n_, n_);
                out.value.noalias() += f.value * g.value * blk;
                for (int k = 0; k < n_; ++k) {
                    out.d1[k].noalias() += (f.grad_y(k) * g.value + f.value * g.grad_y(k)) * blk;
                    for (int m = 0; m < n_; ++m) {
                        double c = f.hess_y(k, m) * g.value + f.grad_y(k) * g.grad_y(m) +
                                   f.grad_y(m) * g.grad_y(k) + f.value * g.hess_y(k, m);
                        out.d2[k][m].noalias() += c * blk;
                    }
                }
            }
        }
    }
    if (alpha_floor_) {
        double chi = floor_bump_->value_at(y);
        Vec gchi = floor_bump_->grad_at(y);
        Mat hchi = floor_bump_->hess_at(y);
        AJet mixed = zero_ajet(n_);
        Mat alpha_eye = alpha_ * Mat::Identity(n_, n_);
        mixed.value = chi * out.value + (1.0 - chi) * alpha_eye;
        for (int k = 0; k < n_; ++k) {
            mixed.d1[k] = chi * out.d1[k] + gchi(k) * (out.value - alpha_eye);
            for (int m = 0; m < n_; ++m)
                mixed.d2[k][m] = chi * out.d2[k][m] + gchi(k) * out.d1[m] + gchi(m) * out.d1[k] +
                                 hchi(k, m) * (out.value - alpha_eye);
        }
        return mixed;
    }
    return out;
}

BJet LearnedCoefficients::b_jet(double t, const Vec& y) const {
    const int Q = num_centers();
    BJet out;
    out.value = Vec::Zero(n_);
    out.d1 = Mat::Zero(n_, n_);
    const SpaceTimeDomain& dom = kernel_->domain();
    if (t < 0.0 || t > dom.T || y.norm() > dom.r_star) return out;
    STPoint z{t, y};
    for (int l = 0; l < Q; ++l) {
        auto jet = kernel_->jet2(z, centers_[l]);
        Vec bl = B_.segment(l * n_, n_);
        out.value += jet.value * bl;
        out.d1 += bl * jet.grad_y.transpose();
    }
    return out;
}

Mat LearnedCoefficients::a_batch(double t, const Mat& ys) const {
    const int Q = num_centers();
    const int P = static_cast<int>(ys.cols());
    Mat K(Q, P);
    const SpaceTimeDomain& dom = kernel_->domain();
    bool t_inside = t >= 0.0 && t <= dom.T;
    for (int p = 0; p < P; ++p) {
        STPoint z{t, ys.col(p)};
        bool inside = t_inside && ys.col(p).norm() <= dom.r_star;
        for (int l = 0; l < Q; ++l) K(l, p) = inside ? kernel_->value(z, centers_[l]) : 0.0;
    }
    Mat out(n_ * n_, P);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            // Q x Q slice holding entry (i,j) of every block
            Mat slice(Q, Q);
            for (int l = 0; l < Q; ++l)
                for (int lp = 0; lp < Q; ++lp) slice(l, lp) = A_(l * n_ + i, lp * n_ + j);
            Mat G = slice * K;
            out.row(j * n_ + i) = (K.cwiseProduct(G)).colwise().sum();
        }
    }
    if (alpha_floor_) {
        for (int p = 0; p < P; ++p) {
            double chi = floor_bump_->value_at(ys.col(p));
            Mat m = chi * Eigen::Map<Mat>(out.col(p).data(), n_, n_).eval();
            m.diagonal().array() += (1.0 - chi) * alpha_;
            out.col(p) = Eigen::Map<Vec>(m.data(), n_ * n_);
        }
    }
    return out;
}

Mat LearnedCoefficients::b_batch(double t, const Mat& ys) const {
    const int Q = num_centers();
    const int P = static_cast<int>(ys.cols());
    Mat K(Q, P);
    const SpaceTimeDomain& dom = kernel_->domain();
    bool t_inside = t >= 0.0 && t <= dom.T;
    for (int p = 0; p < P; ++p) {
        STPoint z{t, ys.col(p)};
        bool inside = t_inside && ys.col(p).norm() <= dom.r_star;
        for (int l = 0; l < Q; ++l) K(l, p) = inside ? kernel_->value(z, centers_[l]) : 0.0;
    }
    Mat Bmat(Q, n_);
    for (int l = 0; l < Q; ++l) Bmat.row(l) = B_.segment(l * n_, n_).transpose();
    return Bmat.transpose() * K;
}

// ---------------------------------------------------------------------------
// serialization

std::string LearnedCoefficients::to_json() const {
    nlohmann::json j;
    const int Q = num_centers();
    j["n"] = n_;
    j["Q"] = Q;
    j["alpha"] = alpha_;
    j["alpha_floor"] = alpha_floor_;
    for (const auto& c : centers_) {
        std::vector<double> row = {c.t};
        for (int i = 0; i < n_; ++i) row.push_back(c.x(i));
        j["centers"].push_back(row);
    }
    std::vector<double> aflat;
    aflat.reserve(static_cast<std::size_t>(Q * n_) * static_cast<std::size_t>(Q * n_));
    for (int r = 0; r < Q * n_; ++r)
        for (int c = 0; c < Q * n_; ++c) aflat.push_back(A_(r, c));
    j["A"] = aflat;  // row-major
    j["B"] = std::vector<double>(B_.data(), B_.data() + B_.size());
    j["kernel"] = {
        {"family", "windowed_matern"},
        {"params",
         {{"nu", kernel_->base().nu()},
          {"lengthscale", kernel_->base().lengthscale()},
          {"window_width", kernel_->window().width()}}},
        {"domain",
         {{"T", kernel_->domain().T}, {"r_star", kernel_->domain().r_star}, {"n", kernel_->domain().n}}}};
    return j.dump(2);
}

LearnedCoefficients LearnedCoefficients::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    const int n = j.at("n").get<int>();
    const int Q = j.at("Q").get<int>();
    std::vector<STPoint> centers;
    for (const auto& row : j.at("centers")) {
        STPoint c;
        c.t = row.at(0).get<double>();
        c.x = Vec(n);
        for (int i = 0; i < n; ++i) c.x(i) = row.at(i + 1).get<double>();
        centers.push_back(std::move(c));
    }
    if (static_cast<int>(centers.size()) != Q)
        throw ConfigError("LearnedCoefficients: center count mismatch");
    Mat A(Q * n, Q * n);
    const auto& aflat = j.at("A");
    if (static_cast<int>(aflat.size()) != Q * n * Q * n)
        throw ConfigError("LearnedCoefficients: A size mismatch");
    int idx = 0;
    for (int r = 0; r < Q * n; ++r)
        for (int c = 0; c < Q * n; ++c) A(r, c) = aflat.at(idx++).get<double>();
    Vec B(Q * n);
    const auto& bflat = j.at("B");
    if (static_cast<int>(bflat.size()) != Q * n)
        throw ConfigError("LearnedCoefficients: B size mismatch");
    for (int i = 0; i < Q * n; ++i) B(i) = bflat.at(i).get<double>();

    const auto& kj = j.at("kernel");
    if (kj.at("family").get<std::string>() != "windowed_matern")
        throw ConfigError("LearnedCoefficients: unknown kernel family");
    SpaceTimeDomain dom;
    dom.T = kj.at("domain").at("T").get<double>();
    dom.r_star = kj.at("domain").at("r_star").get<double>();
    dom.n = kj.at("domain").at("n").get<int>();
    MaternKernel base(kj.at("params").at("nu").get<double>(),
                      kj.at("params").at("lengthscale").get<double>());
    auto kernel = std::make_shared<WindowedSpaceTimeKernel>(
        dom, base, kj.at("params").at("window_width").get<double>());
    return LearnedCoefficients(std::move(centers), std::move(A), std::move(B), std::move(kernel),
                               j.at("alpha").get<double>(), j.at("alpha_floor").get<bool>());
}

void LearnedCoefficients::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("LearnedCoefficients: cannot write " + path);
    out << to_json() << "\n";
}

LearnedCoefficients LearnedCoefficients::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("LearnedCoefficients: cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace fokkerfit
