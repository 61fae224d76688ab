#include "runner.hpp"
#include "shapegeo/metspace.hpp"

namespace cli {

using namespace shapegeo;
using namespace shapegeo::met;

namespace {

double max_entry_diff(const SPDMatrixField& a, const SPDMatrixField& b) {
    double d = 0;
    for (int i = 0; i < a.points(); ++i) d = std::max(d, (a.values[i] - b.values[i]).cwiseAbs().maxCoeff());
    return d;
}

void trajectory_rows(io::CsvWriter& w, double t, const SPDMatrixField& g) {
    const int m = g.dim();
    for (int i = 0; i < g.points(); ++i) {
        std::vector<double> row{t, double(i)};
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) row.push_back(g.values[i](a, b));
        w.row(row);
    }
}

std::vector<std::string> trajectory_header(int m) {
    std::vector<std::string> h{"t", "point"};
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) h.push_back("g" + std::to_string(a) + std::to_string(b));
    return h;
}

void geodesic(Run& r) {
    auto f = io::read_met(r.input_file("input"));
    const int m = f.g.dim();
    // a missing h means the zero velocity
    if (f.h.values.empty()) f.h.values.assign(f.g.points(), Mat::Zero(m, m));
    check_tangent(f.g, f.h);
    const std::string& method = r.str("method");
    if (method != "explicit" && method != "ode" && method != "both") throw ConfigError("method must be explicit, ode or both");
    TimeGrid grid(0.0, r.num("t1"), r.integer("steps"));
    const int stride = r.integer("stride");
    std::vector<double> times;
    std::vector<SPDMatrixField> explicit_path, ode_path;
    if (method != "explicit") {
        auto p = geodesic_ode(f.g, f.h, grid, stride);
        times = p.times;
        ode_path = p.fields;
    }
    if (method != "ode") {
        if (times.empty())
            for (int i = 0; i <= grid.steps; i += stride) times.push_back(grid.at(i));
        if (times.back() != grid.t1) times.push_back(grid.t1);
        for (double t : times) explicit_path.push_back(geodesic_explicit(f.g, f.h, t));
    }
    const auto& path = explicit_path.empty() ? ode_path : explicit_path;
    io::CsvWriter w(trajectory_header(m));
    std::vector<double> vol, speed;
    double from_start = 0;
    std::vector<bool> all(f.g.points(), true);
    for (std::size_t k = 0; k < times.size(); ++k) {
        trajectory_rows(w, times[k], path[k]);
        vol.push_back(volume(path[k], all));
        from_start = std::max(from_start, max_entry_diff(path[k], f.g));
    }
    r.save_csv("trajectory.csv", w);
    r.save_json("final.json", io::met_json(path.back()));
    r.save_svg("volume.svg", {series(times, vol, "total volume")}, "volume along the geodesic", false);
    r.diagnostics["speed_squared"] = ebin_inner(f.g, f.h, f.h);
    r.diagnostics["max_deviation_from_start"] = from_start;
    r.diagnostics["volume_initial"] = vol.front();
    r.diagnostics["volume_final"] = vol.back();
    r.diagnostics["trace_bound"] = std::isfinite(trace_bound(f.g, f.h)) ? json(trace_bound(f.g, f.h)) : json(nullptr);
    if (method == "both") {
        double d = 0;
        for (std::size_t k = 0; k < times.size(); ++k) d = std::max(d, max_entry_diff(ode_path[k], explicit_path[k]));
        r.diagnostics["ode_vs_explicit"] = d;
    }
}

void distance(Run& r) {
    auto a = io::read_met(r.input_file("source"));
    auto b = io::read_met(r.input_file("target"));
    auto h = log_map(a.g, b.g);
    const double d = distance_omega2(a.g, b.g);
    auto back = geodesic_explicit(a.g, h, 1.0);
    json pts = io::met_json(a.g);
    io::CsvWriter w({"point", "weight", "distance"});
    for (int i = 0; i < a.g.points(); ++i) {
        pts["points"][i]["h"] = io::to_json(h.values[i]);
        w.row({double(i), a.g.weights[i], point_distance(a.g.values[i], b.g.values[i], a.g.gtilde[i])});
    }
    r.save_json("log.json", pts);
    r.save_csv("distances.csv", w);
    double rel = 0;
    for (int i = 0; i < a.g.points(); ++i)
        rel = std::max(rel, (back.values[i] - b.g.values[i]).norm() / b.g.values[i].norm());
    r.diagnostics["distance"] = d;
    r.diagnostics["exp_log_roundtrip"] = rel;
}

SymTangentField random_tangent(std::mt19937_64& g, int P, int m) {
    std::normal_distribution<> N;
    SymTangentField h;
    for (int i = 0; i < P; ++i) {
        Mat a(m, m);
        for (int x = 0; x < m; ++x)
            for (int y = 0; y < m; ++y) a(x, y) = N(g);
        h.values.push_back(0.5 * (a + a.transpose()));
    }
    return h;
}

void curvature(Run& r) {
    auto f = io::read_met(r.input_file("input"));
    const int P = f.g.points(), m = f.g.dim(), samples = r.integer("samples");
    io::CsvWriter w({"sample", "curvature"});
    std::vector<double> vals;
    for (int s = 0; s < samples; ++s) {
        auto h = random_tangent(r.rng, P, m), k = random_tangent(r.rng, P, m);
        const double hn = std::sqrt(ebin_inner(f.g, h, h));
        for (auto& v : h.values) v /= hn;
        const double c = ebin_inner(f.g, k, h);
        for (int i = 0; i < P; ++i) k.values[i] -= c * h.values[i];
        const double kn = std::sqrt(ebin_inner(f.g, k, k));
        if (!(kn > 1e-12)) continue;  // m = 1 pairs are parallel at a single point
        for (auto& v : k.values) v /= kn;
        vals.push_back(sectional_curvature(f.g, h, k).value);
        w.row({double(s), vals.back()});
    }
    r.save_csv("curvature.csv", w);
    r.diagnostics["dim"] = m;
    r.diagnostics["pairs"] = vals.size();
    r.diagnostics["max"] = vals.empty() ? json(nullptr) : json(*std::max_element(vals.begin(), vals.end()));
    r.diagnostics["min"] = vals.empty() ? json(nullptr) : json(*std::min_element(vals.begin(), vals.end()));
}

}  // namespace

std::vector<Command> met_commands() {
    return {
        {"met", "geodesic", "Geodesic of the Ebin metric from a metric field and a velocity",
         {{"input", Type::Text, "", "metric JSON {m, points: [{weight, gtilde, g, h}]}; a missing h is zero"},
          {"t1", Type::Real, "1", "final time"},
          {"steps", Type::Int, "400", "time steps"},
          {"stride", Type::Int, "20", "store every stride-th step"},
          {"method", Type::Text, "both", "explicit (closed form), ode (RK4) or both (compared)"}},
         geodesic},
        {"met", "distance", "Omega_2 distance and pointwise logarithm between two metric fields",
         {{"source", Type::Text, "", "metric JSON at t = 0"}, {"target", Type::Text, "", "metric JSON at t = 1"}},
         distance},
        {"met", "curvature", "Sectional curvature of the Ebin metric on random orthonormal planes",
         {{"input", Type::Text, "", "metric JSON"}, {"samples", Type::Int, "20", "random planes"}},
         curvature},
    };
}

}  // namespace cli
