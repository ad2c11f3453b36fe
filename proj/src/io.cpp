#include "latwave/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace latwave {

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vec vec_from_json(const json& j) {
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

json mat_to_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_to_json(m.row(r).transpose()));
    return a;
}

json cmat_to_json(const CMat& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        a.push_back(row);
    }
    return a;
}

json wave_to_json(const WaveProfile& u) {
    json j;
    j["class"] = class_name(u.cls);
    j["system"] = u.system;
    j["system_params"] = u.system_params;
    j["d"] = u.d;
    j["K"] = u.K;
    j["padding"] = u.padding;
    j["k"] = {{"p", u.p}, {"N", u.N}, {"value", u.k}};
    j["omega"] = u.omega;
    j["speed"] = u.speed();
    j["params"] = vec_to_json(u.params);
    const CMat cm = complex_modes(u);
    json modes = json::array();
    for (int c = 0; c < u.d; ++c) {
        json comp = json::array();
        for (Eigen::Index n = 0; n < cm.rows(); ++n) comp.push_back({cm(n, c).real(), cm(n, c).imag()});
        modes.push_back(comp);
    }
    j["modes"] = modes;
    j["coefficients"] = vec_to_json(u.coeffs);
    j["residual"] = u.residual;
    j["solver"] = {{"iterations", u.iterations}, {"tol", u.tol}, {"slack", u.slack}};
    return j;
}

WaveProfile wave_from_json(const json& j) {
    try {
        WaveProfile u;
        u.cls = class_from_name(j.at("class").get<std::string>());
        u.system = j.at("system").get<std::string>();
        u.system_params = j.at("system_params").get<std::map<std::string, double>>();
        u.d = j.at("d").get<int>();
        u.K = j.at("K").get<int>();
        u.padding = j.at("padding").get<int>();
        u.p = j.at("k").at("p").get<int>();
        u.N = j.at("k").at("N").get<int>();
        u.k = j.at("k").at("value").get<double>();
        u.omega = j.at("omega").get<double>();
        u.params = vec_from_json(j.at("params"));
        if (j.contains("coefficients")) {
            u.coeffs = vec_from_json(j.at("coefficients"));
        } else {
            const int M = 2 * u.K + 1;
            u.coeffs.resize(u.d * M);
            for (int c = 0; c < u.d; ++c) {
                const json& comp = j.at("modes").at(c);
                CVec cm(u.K + 1);
                for (int n = 0; n <= u.K; ++n) cm(n) = cplx(comp.at(n).at(0).get<double>(), comp.at(n).at(1).get<double>());
                u.coeffs.segment(c * M, M) = from_complex_modes(cm);
            }
        }
        if (u.coeffs.size() != u.d * (2 * u.K + 1))
            throw Error(ErrorKind::SchemaError, "wave coefficients: length does not match d*(2K+1)");
        u.residual = j.at("residual").get<double>();
        const json& s = j.at("solver");
        u.iterations = s.at("iterations").get<int>();
        u.tol = s.at("tol").get<double>();
        u.slack = s.at("slack").get<double>();
        return u;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("wave document: ") + e.what());
    }
}

void write_text_atomic(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IOError, "cannot write " + tmp.string());
        out << text;
        if (!out) throw Error(ErrorKind::IOError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorKind::IOError, "rename to " + path + " failed: " + ec.message());
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IOError, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace latwave
