#pragma once
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "curve_paths.hpp"
#include "diffgroup.hpp"
#include "errors.hpp"
#include "landmarks.hpp"
#include "metspace.hpp"

namespace shapegeo::io {

using json = nlohmann::json;

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("format_error", what) {}
};

inline std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot write " + path);
    f << text;
}

inline json read_json(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << v;
    return ss.str();
}

// ----------------------------------------------------------- matrices

inline json to_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        a.push_back(r);
    }
    return a;
}

inline Mat matrix_from_json(const json& a, const std::string& what) {
    if (!a.is_array() || a.empty()) throw FormatError(what + ": expected a non-empty array of rows");
    const std::size_t cols = a[0].size();
    Mat m(a.size(), cols);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_array() || a[i].size() != cols) throw FormatError(what + ": ragged rows");
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = a[i][j].get<double>();
    }
    return m;
}

// Numeric CSV; a first line that does not parse as numbers is taken as a header.
inline Mat read_csv(const std::string& path) {
    std::istringstream in(read_text(path));
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> r;
        std::stringstream ls(line);
        std::string cell;
        bool ok = true;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t pos;
                r.push_back(std::stod(cell, &pos));
            } catch (...) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            if (first) {
                first = false;
                continue;
            }
            throw FormatError(path + ": non-numeric cell in '" + line + "'");
        }
        first = false;
        if (!rows.empty() && r.size() != rows[0].size()) throw FormatError(path + ": ragged rows");
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw FormatError(path + ": no data rows");
    Mat m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[0].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

inline std::string fmt(double x) {
    std::ostringstream ss;
    ss << std::setprecision(17) << x;
    return ss.str();
}

struct CsvWriter {
    std::ostringstream out;
    explicit CsvWriter(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << "\n";
    }
    void row(const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << fmt(v[i]);
        out << "\n";
    }
    void save(const std::string& path) const { write_text(path, out.str()); }
};

inline bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

// ---------------------------------------------------------- landmarks

struct LandmarkFile {
    Mat points;
    Mat momenta;  // empty when absent
};

inline LandmarkFile read_landmarks(const std::string& path) {
    LandmarkFile f;
    if (ends_with(path, ".csv")) {
        f.points = read_csv(path);
        return f;
    }
    json j = read_json(path);
    f.points = matrix_from_json(j.at("points"), path + " points");
    if (j.contains("dim") && j["dim"].get<int>() != f.points.cols()) throw FormatError(path + ": dim does not match points");
    if (j.contains("momenta")) {
        f.momenta = matrix_from_json(j["momenta"], path + " momenta");
        if (f.momenta.rows() != f.points.rows() || f.momenta.cols() != f.points.cols())
            throw FormatError(path + ": momenta shape differs from points");
    }
    return f;
}

inline json landmarks_json(const Mat& q, const Mat* p = nullptr) {
    json j{{"dim", q.cols()}, {"points", to_json(q)}};
    if (p) j["momenta"] = to_json(*p);
    return j;
}

// ------------------------------------------------------------- curves

inline curves::Curve read_curve(const std::string& path) {
    Mat c;
    if (ends_with(path, ".csv")) {
        c = read_csv(path);
    } else {
        json j = read_json(path);
        c = matrix_from_json(j.at("samples"), path + " samples");
    }
    if (c.cols() != 2) throw FormatError(path + ": curves need two columns");
    curves::check_curve(c);
    return c;
}

inline json curve_json(const curves::Curve& c) { return json{{"samples", to_json(c)}}; }

inline json path_json(const curves::CurvePath& p) {
    json a = json::array();
    for (std::size_t i = 0; i < p.curves.size(); ++i) a.push_back({{"time", p.times[i]}, {"samples", to_json(p.curves[i])}});
    return a;
}

inline curves::CurvePath read_path(const std::string& path) {
    json a = read_json(path);
    curves::CurvePath p;
    for (auto& e : a) {
        p.times.push_back(e.at("time").get<double>());
        p.curves.push_back(matrix_from_json(e.at("samples"), path));
    }
    return p;
}

// ------------------------------------------------------ Fourier fields

inline json field_json(const diff::FourierField& f) {
    json re = json::array(), im = json::array();
    for (int n = 0; n <= f.nmax(); ++n) {
        re.push_back(f.a[n].real());
        im.push_back(f.a[n].imag());
    }
    return json{{"nmax", f.nmax()}, {"re", re}, {"im", im}};
}

inline diff::FourierField field_from_json(const json& j) {
    const int nmax = j.at("nmax").get<int>();
    auto& re = j.at("re");
    auto& im = j.at("im");
    if (int(re.size()) != nmax + 1 || int(im.size()) != nmax + 1)
        throw FormatError("field needs nmax+1 coefficients for n = 0..nmax");
    diff::FourierField f(nmax);
    for (int n = 0; n <= nmax; ++n) f.a[n] = diff::cd(re[n].get<double>(), im[n].get<double>());
    if (std::abs(f.a[0].imag()) > 0) throw FormatError("the mean coefficient must be real");
    return f;
}

// --------------------------------------------------------- Met fields

// {m, points: [{weight, gtilde, g, h?}, ...]}; h is an optional tangent value.
struct MetFile {
    met::SPDMatrixField g;
    met::SymTangentField h;  // empty when absent
};

inline MetFile read_met(const std::string& path) {
    json j = read_json(path);
    const int m = j.at("m").get<int>();
    MetFile f;
    auto& pts = j.at("points");
    f.g.weights.resize(pts.size());
    bool has_h = !pts.empty() && pts[0].contains("h");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        f.g.weights[i] = pts[i].at("weight").get<double>();
        f.g.gtilde.push_back(matrix_from_json(pts[i].at("gtilde"), path + " gtilde"));
        f.g.values.push_back(matrix_from_json(pts[i].at("g"), path + " g"));
        if (f.g.values.back().rows() != m || f.g.gtilde.back().rows() != m) throw FormatError(path + ": matrix size differs from m");
        if (has_h) f.h.values.push_back(matrix_from_json(pts[i].at("h"), path + " h"));
    }
    for (auto& v : f.g.values)
        if ((v - v.transpose()).norm() > 1e-12 * (1 + v.norm())) throw FormatError(path + ": g is not symmetric");
    met::check_field(f.g);
    return f;
}

inline json met_json(const met::SPDMatrixField& g) {
    json pts = json::array();
    for (int i = 0; i < g.points(); ++i)
        pts.push_back({{"weight", g.weights[i]}, {"gtilde", to_json(g.gtilde[i])}, {"g", to_json(g.values[i])}});
    return json{{"m", g.dim()}, {"points", pts}};
}

// ------------------------------------------------------------- config

// Flat key-value text: `key = value` lines, `[table]` headers, `#` comments.
// Keys inside a table are stored as "table.key".
inline std::map<std::string, std::string> parse_config(const std::string& text, const std::string& origin = "config") {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line, table;
    int lineno = 0;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw FormatError(origin + ":" + std::to_string(lineno) + ": unterminated table header");
            table = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key.empty()) throw FormatError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
        kv[table.empty() ? key : table + "." + key] = val;
    }
    return kv;
}

}  // namespace shapegeo::io
