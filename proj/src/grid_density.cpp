#include "fokkerfit/grid_density.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fokkerfit {

Vec Lattice::point_at(int flat) const {
    const int n = dim();
    Vec p(n);
    int rem = flat;
    for (int d = 0; d < n; ++d) {
        int k = rem % nx[d];
        rem /= nx[d];
        p(d) = nx[d] == 1 ? 0.5 * (xlo(d) + xhi(d)) : xlo(d) + (xhi(d) - xlo(d)) * k / (nx[d] - 1);
    }
    return p;
}

std::vector<int> Lattice::unflatten(int flat) const {
    std::vector<int> idx(dim());
    int rem = flat;
    for (int d = 0; d < dim(); ++d) {
        idx[d] = rem % nx[d];
        rem /= nx[d];
    }
    return idx;
}

int Lattice::flatten(const std::vector<int>& idx) const {
    int flat = 0, stride = 1;
    for (int d = 0; d < dim(); ++d) {
        flat += idx[d] * stride;
        stride *= nx[d];
    }
    return flat;
}

Mat Lattice::space_matrix() const {
    const int P = space_points();
    Mat out(dim(), P);
    for (int p = 0; p < P; ++p) out.col(p) = point_at(p);
    return out;
}

double Lattice::trapezoid_weight(int flat) const {
    double w = 1.0;
    int rem = flat;
    for (int d = 0; d < dim(); ++d) {
        int k = rem % nx[d];
        rem /= nx[d];
        if (nx[d] > 1 && (k == 0 || k == nx[d] - 1)) w *= 0.5;
    }
    return w;
}

bool Lattice::compatible(const Lattice& o) const {
    if (nt != o.nt || t0 != o.t0 || t1 != o.t1 || nx != o.nx) return false;
    return (xlo - o.xlo).norm() == 0.0 && (xhi - o.xhi).norm() == 0.0;
}

double GridDensity::mass_at(int k) const {
    const int P = lattice.space_points();
    double s = 0.0;
    for (int p = 0; p < P; ++p) s += lattice.trapezoid_weight(p) * values(k, p);
    return s * lattice.cell_volume();
}

double GridDensity::l2_space(int k) const {
    const int P = lattice.space_points();
    double s = 0.0;
    for (int p = 0; p < P; ++p)
        s += lattice.trapezoid_weight(p) * values(k, p) * values(k, p);
    return std::sqrt(s * lattice.cell_volume());
}

double GridDensity::l2_spacetime_sq() const { return inner(*this); }

double GridDensity::inner(const GridDensity& other) const {
    if (!lattice.compatible(other.lattice))
        throw ConfigError("GridDensity: incompatible lattices");
    const int P = lattice.space_points();
    double total = 0.0;
    for (int k = 0; k < lattice.nt; ++k) {
        double wt = (k == 0 || k == lattice.nt - 1) ? 0.5 : 1.0;
        double s = 0.0;
        for (int p = 0; p < P; ++p)
            s += lattice.trapezoid_weight(p) * values(k, p) * other.values(k, p);
        total += wt * s;
    }
    return total * lattice.cell_volume() * lattice.dt();
}

void GridDensity::save(const std::string& dir, const std::string& stem) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        nlohmann::json j;
        j["t0"] = lattice.t0;
        j["t1"] = lattice.t1;
        j["nt"] = lattice.nt;
        j["n"] = lattice.dim();
        j["xlo"] = std::vector<double>(lattice.xlo.data(), lattice.xlo.data() + lattice.dim());
        j["xhi"] = std::vector<double>(lattice.xhi.data(), lattice.xhi.data() + lattice.dim());
        j["nx"] = lattice.nx;
        std::ofstream out(dir + "/" + stem + "_lattice.json");
        if (!out) throw ConfigError("GridDensity: cannot write lattice descriptor");
        out << j.dump(2) << "\n";
    }
    std::FILE* f = std::fopen((dir + "/" + stem + ".csv").c_str(), "w");
    if (!f) throw ConfigError("GridDensity: cannot write " + dir + "/" + stem + ".csv");
    std::fprintf(f, "t");
    for (int d = 1; d <= lattice.dim(); ++d) std::fprintf(f, ",x%d", d);
    std::fprintf(f, ",value\n");
    const int P = lattice.space_points();
    for (int k = 0; k < lattice.nt; ++k) {
        for (int p = 0; p < P; ++p) {
            std::fprintf(f, "%.17g", lattice.time_at(k));
            Vec x = lattice.point_at(p);
            for (int d = 0; d < lattice.dim(); ++d) std::fprintf(f, ",%.17g", x(d));
            std::fprintf(f, ",%.17g\n", values(k, p));
        }
    }
    std::fclose(f);
}

GridDensity GridDensity::load(const std::string& dir, const std::string& stem) {
    std::ifstream jf(dir + "/" + stem + "_lattice.json");
    if (!jf) throw ConfigError("GridDensity: missing lattice descriptor");
    nlohmann::json j = nlohmann::json::parse(jf);
    Lattice lat;
    lat.t0 = j.at("t0").get<double>();
    lat.t1 = j.at("t1").get<double>();
    lat.nt = j.at("nt").get<int>();
    int n = j.at("n").get<int>();
    lat.xlo = Vec(n);
    lat.xhi = Vec(n);
    for (int d = 0; d < n; ++d) {
        lat.xlo(d) = j.at("xlo").at(d).get<double>();
        lat.xhi(d) = j.at("xhi").at(d).get<double>();
    }
    lat.nx = j.at("nx").get<std::vector<int>>();
    GridDensity g(lat);

    std::ifstream cf(dir + "/" + stem + ".csv");
    if (!cf) throw ConfigError("GridDensity: missing csv");
    std::string line;
    std::getline(cf, line);
    const int P = lat.space_points();
    long expect = static_cast<long>(lat.nt) * P, row = 0;
    while (std::getline(cf, line)) {
        if (line.empty()) continue;
        if (row >= expect) throw ConfigError("GridDensity: too many rows");
        const char* p = line.c_str();
        char* endp = nullptr;
        // coordinates are implied by row order; parse and discard
        std::strtod(p, &endp);
        for (int d = 0; d < lat.dim(); ++d) {
            p = endp + 1;
            std::strtod(p, &endp);
        }
        p = endp + 1;
        g.values(static_cast<int>(row / P), static_cast<int>(row % P)) = std::strtod(p, &endp);
        ++row;
    }
    if (row != expect) throw ConfigError("GridDensity: row count mismatch");
    return g;
}

}  // namespace fokkerfit
