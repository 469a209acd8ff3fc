#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pme/errors.hpp"
#include "pme/matrix.hpp"
#include "pme/spline.hpp"
#include "pme/templates.hpp"

namespace pme {

/// 17 significant digits: doubles round-trip exactly through text.
inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Writes content atomically (temp file + rename).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

/// Cloud CSV: one point per row, comma-separated numeric columns. An
/// optional single header row is auto-detected by a non-numeric first token.
inline PointCloud read_cloud_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string token;
        bool numeric = true;
        while (std::getline(ss, token, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(token, &pos);
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) {  // header row
                first = false;
                continue;
            }
            throw Error("non-numeric CSV row in " + path.string());
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error("ragged CSV in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("empty CSV: " + path.string());
    PointCloud cloud(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) cloud(i, j) = rows[i][j];
    return cloud;
}

inline void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
    std::string out;
    for (std::size_t i = 0; i < cloud.rows(); ++i) {
        for (std::size_t j = 0; j < cloud.cols(); ++j) {
            if (j) out += ',';
            out += format_real(cloud(i, j));
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

inline nlohmann::json model_to_json(const SplineMap& map) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["template"] = template_name(map.kind);
    j["ambient_dim"] = map.ambient_dim;
    j["lambda"] = map.lambda;
    nlohmann::json knots = nlohmann::json::array();
    for (const TemplatePoint& m : map.knots) {
        if (map.kind == TemplateKind::Sphere)
            knots.push_back({m.v[0], m.v[1], m.v[2]});
        else
            knots.push_back(m.t);
    }
    j["knots"] = std::move(knots);
    auto matrix_json = [](const Matrix& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t jc = 0; jc < m.cols(); ++jc) row.push_back(m(i, jc));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    j["theta"] = matrix_json(map.theta);
    j["alpha"] = matrix_json(map.alpha);
    return j;
}

inline SplineMap model_from_json(const nlohmann::json& j) {
    SplineMap map;
    const std::string kind = j.at("template").get<std::string>();
    if (kind == "interval")
        map.kind = TemplateKind::Interval;
    else if (kind == "circle")
        map.kind = TemplateKind::Circle;
    else if (kind == "sphere")
        map.kind = TemplateKind::Sphere;
    else
        throw Error("model JSON: unknown template '" + kind + "'");
    map.ambient_dim = j.at("ambient_dim").get<std::size_t>();
    map.lambda = j.at("lambda").get<double>();
    for (const auto& k : j.at("knots")) {
        if (map.kind == TemplateKind::Sphere) {
            map.knots.push_back(TemplatePoint::sphere(k.at(0).get<double>(), k.at(1).get<double>(),
                                                      k.at(2).get<double>()));
        } else if (map.kind == TemplateKind::Circle) {
            map.knots.push_back(TemplatePoint::circle(k.get<double>()));
        } else {
            map.knots.push_back(TemplatePoint::interval(k.get<double>()));
        }
    }
    auto matrix_from = [](const nlohmann::json& rows) {
        if (rows.empty()) return Matrix();
        Matrix m(rows.size(), rows.at(0).size());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t jc = 0; jc < m.cols(); ++jc) m(i, jc) = rows.at(i).at(jc).get<double>();
        return m;
    };
    map.theta = matrix_from(j.at("theta"));
    map.alpha = matrix_from(j.at("alpha"));
    if (map.alpha.rows() != map.knots.size())
        throw Error("model JSON: alpha rows != knot count");
    return map;
}

inline void write_model_json(const std::filesystem::path& path, const SplineMap& map) {
    write_file_atomic(path, model_to_json(map).dump(2) + "\n");
}

inline SplineMap read_model_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

}  // namespace pme
