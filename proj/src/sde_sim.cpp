#include "fokkerfit/sde_sim.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>

namespace fokkerfit {

InitialLaw InitialLaw::gaussian(Vec mean, Mat cov) {
    InitialLaw law;
    law.kind = Kind::Gaussian;
    law.mean = std::move(mean);
    law.cov = std::move(cov);
    if (law.cov.rows() != law.mean.size() || law.cov.cols() != law.mean.size())
        throw ConfigError("InitialLaw: covariance shape mismatch");
    Eigen::LLT<Mat> llt(law.cov);
    if (llt.info() != Eigen::Success) throw ConfigError("InitialLaw: covariance must be SPD");
    return law;
}

InitialLaw InitialLaw::uniform_ball(int n, double radius) {
    if (radius <= 0.0) throw ConfigError("InitialLaw: radius > 0 required");
    InitialLaw law;
    law.kind = Kind::UniformBall;
    law.mean = Vec::Zero(n);
    law.radius = radius;
    return law;
}

InitialLaw InitialLaw::point(Vec x0) {
    InitialLaw law;
    law.kind = Kind::Point;
    law.mean = std::move(x0);
    return law;
}

Vec InitialLaw::draw(Rng& rng) const {
    const int n = dim();
    switch (kind) {
        case Kind::Point:
            return mean;
        case Kind::Gaussian: {
            Vec z(n);
            for (int i = 0; i < n; ++i) z(i) = rng.normal();
            Eigen::LLT<Mat> llt(cov);
            return mean + llt.matrixL() * z;
        }
        case Kind::UniformBall: {
            Vec z(n);
            for (int i = 0; i < n; ++i) z(i) = rng.normal();
            double r = radius * std::pow(rng.uniform(), 1.0 / n);
            double zn = z.norm();
            if (zn == 0.0) return Vec::Zero(n);
            return (r / zn) * z;
        }
    }
    throw ConfigError("InitialLaw: unknown kind");
}

double InitialLaw::density(const Vec& y) const {
    const int n = dim();
    switch (kind) {
        case Kind::Point:
            throw ConfigError("InitialLaw: point mass has no density");
        case Kind::Gaussian: {
            Eigen::LLT<Mat> llt(cov);
            Vec d = y - mean;
            Vec s = llt.matrixL().solve(d);
            double det = 1.0;
            for (int i = 0; i < n; ++i) det *= llt.matrixL()(i, i);
            return std::exp(-0.5 * s.squaredNorm()) / (std::pow(2.0 * M_PI, 0.5 * n) * det);
        }
        case Kind::UniformBall: {
            double vn = std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
            return y.norm() <= radius ? 1.0 / (vn * std::pow(radius, n)) : 0.0;
        }
    }
    throw ConfigError("InitialLaw: unknown kind");
}

nlohmann::json InitialLaw::to_json() const {
    nlohmann::json j;
    switch (kind) {
        case Kind::Point:
            j["kind"] = "point";
            j["x0"] = std::vector<double>(mean.data(), mean.data() + mean.size());
            break;
        case Kind::Gaussian: {
            j["kind"] = "gaussian";
            j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
            std::vector<double> c;
            for (int r = 0; r < cov.rows(); ++r)
                for (int q = 0; q < cov.cols(); ++q) c.push_back(cov(r, q));
            j["cov"] = c;
            break;
        }
        case Kind::UniformBall:
            j["kind"] = "uniform_ball";
            j["radius"] = radius;
            j["n"] = dim();
            break;
    }
    return j;
}

ObservationSet simulate(const CoefficientField& field, double alpha, const InitialLaw& law, int M,
                        int N, double T, double dt, std::uint64_t seed) {
    const int n = field.dim();
    if (alpha <= 0.0) throw ConfigError("simulate: alpha > 0 required");
    if (M < 2) throw ConfigError("simulate: M >= 2 required");
    if (N < 1) throw ConfigError("simulate: N >= 1 required");
    if (T <= 0.0 || dt <= 0.0) throw ConfigError("simulate: T, dt > 0 required");
    if (law.dim() != n) throw ConfigError("simulate: law dimension mismatch");

    const double interval = T / (M - 1);
    const int steps_per = std::max(1, static_cast<int>(std::ceil(interval / dt - 1e-12)));
    const double dt_eff = interval / steps_per;
    const double sqdt = std::sqrt(dt_eff);

    ObservationSet set;
    set.n = n;
    set.M = M;
    set.N = N;
    set.T = T;
    set.seed = seed;
    set.times.resize(M);
    for (int l = 0; l < M; ++l) set.times[l] = T * l / (M - 1);
    set.samples.assign(M, Mat::Zero(n, N));

    RegularizedDiffusion diffusion(
        FieldPtr(&field, [](const CoefficientField*) {}), alpha);
    const bool cache_root = field.constant_in_state();
    Mat cached_root;
    if (cache_root) cached_root = diffusion.sqrt(0.0, Vec::Zero(n));

    std::string failure;
    std::mutex mu;
    parallel_for(N, [&](std::int64_t beg, std::int64_t end) {
        Vec z(n);
        for (std::int64_t j = beg; j < end; ++j) {
            Rng rng(mix_seed(seed, static_cast<std::uint64_t>(j)));
            Vec x = law.draw(rng);
            set.samples[0].col(j) = x;
            double t = 0.0;
            for (int l = 1; l < M; ++l) {
                for (int s = 0; s < steps_per; ++s) {
                    for (int i = 0; i < n; ++i) z(i) = rng.normal();
                    Mat root = cache_root ? cached_root : diffusion.sqrt(t, x);
                    x += field.b(t, x) * dt_eff + root * (sqdt * z);
                    t += dt_eff;
                    if (!x.allFinite()) {
                        std::lock_guard<std::mutex> lock(mu);
                        if (failure.empty())
                            failure = "simulate: non-finite state at (l=" + std::to_string(l) +
                                      ", j=" + std::to_string(j) + ", t=" + std::to_string(t) + ")";
                        return;
                    }
                }
                set.samples[l].col(j) = x;
            }
        }
    });
    if (!failure.empty()) throw NumericalError(failure);

    set.manifest["n"] = n;
    set.manifest["M"] = M;
    set.manifest["N"] = N;
    set.manifest["T"] = T;
    set.manifest["seed"] = seed;
    set.manifest["dt"] = dt_eff;
    set.manifest["law"] = law.to_json();
    set.manifest["schema_version"] = 1;
    return set;
}

void save(const ObservationSet& set, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream mf(dir + "/manifest.json");
        if (!mf) throw ConfigError("save: cannot write manifest in " + dir);
        mf << set.manifest.dump(2) << "\n";
    }
    std::FILE* f = std::fopen((dir + "/samples.csv").c_str(), "w");
    if (!f) throw ConfigError("save: cannot write samples in " + dir);
    std::fprintf(f, "t_index,sample_index");
    for (int i = 1; i <= set.n; ++i) std::fprintf(f, ",x%d", i);
    std::fprintf(f, "\n");
    for (int l = 0; l < set.M; ++l) {
        for (int j = 0; j < set.N; ++j) {
            std::fprintf(f, "%d,%d", l, j);
            for (int i = 0; i < set.n; ++i) std::fprintf(f, ",%.17g", set.samples[l](i, j));
            std::fprintf(f, "\n");
        }
    }
    std::fclose(f);
}

ObservationSet load(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw ConfigError("load: missing manifest.json in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(mf);

    ObservationSet set;
    set.manifest = manifest;
    set.n = manifest.at("n").get<int>();
    set.M = manifest.at("M").get<int>();
    set.N = manifest.at("N").get<int>();
    set.T = manifest.at("T").get<double>();
    set.seed = manifest.at("seed").get<std::uint64_t>();
    if (set.n < 1 || set.M < 2 || set.N < 1) throw ConfigError("load: corrupt manifest dimensions");
    set.times.resize(set.M);
    for (int l = 0; l < set.M; ++l) set.times[l] = set.T * l / (set.M - 1);
    set.samples.assign(set.M, Mat::Zero(set.n, set.N));

    std::ifstream sf(dir + "/samples.csv");
    if (!sf) throw ConfigError("load: missing samples.csv in " + dir);
    std::string line;
    if (!std::getline(sf, line)) throw ConfigError("load: empty samples.csv");
    long rows = 0;
    std::vector<std::vector<bool>> seen(set.M, std::vector<bool>(set.N, false));
    while (std::getline(sf, line)) {
        if (line.empty()) continue;
        const char* p = line.c_str();
        char* endp = nullptr;
        long l = std::strtol(p, &endp, 10);
        if (*endp != ',') throw ConfigError("load: malformed row: " + line);
        p = endp + 1;
        long j = std::strtol(p, &endp, 10);
        if (l < 0 || l >= set.M || j < 0 || j >= set.N)
            throw ConfigError("load: sample index out of manifest range: " + line);
        for (int i = 0; i < set.n; ++i) {
            if (*endp != ',') throw ConfigError("load: row/dimension mismatch: " + line);
            p = endp + 1;
            double v = std::strtod(p, &endp);
            set.samples[l](i, j) = v;
        }
        if (*endp != '\0') throw ConfigError("load: row/dimension mismatch: " + line);
        seen[l][j] = true;
        ++rows;
    }
    if (rows != static_cast<long>(set.M) * set.N)
        throw ConfigError("load: row count " + std::to_string(rows) + " differs from M*N=" +
                          std::to_string(static_cast<long>(set.M) * set.N));
    for (int l = 0; l < set.M; ++l)
        for (int j = 0; j < set.N; ++j)
            if (!seen[l][j]) throw ConfigError("load: missing sample row");
    for (const auto& m : set.samples)
        if (!m.allFinite()) throw ConfigError("load: non-finite sample");
    return set;
}

}  // namespace fokkerfit
