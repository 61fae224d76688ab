#include <sstream>

#include "runner.hpp"
#include "shapegeo/curve_flows.hpp"
#include "shapegeo/curve_paths.hpp"

namespace cli {

using namespace shapegeo;
using namespace shapegeo::curves;

namespace {

// "circle:n,r[,cx,cy]", "ellipse:n,a,b[,cx,cy,rot]" or a CSV/JSON file.
Curve curve_input(Run& r, const std::string& key) {
    const std::string& v = r.str(key);
    if (v.empty()) throw ConfigError("parameter '" + key + "' needs a curve");
    auto colon = v.find(':');
    if (colon != std::string::npos && (v.rfind("circle:", 0) == 0 || v.rfind("ellipse:", 0) == 0)) {
        std::vector<double> a;
        std::stringstream ss(v.substr(colon + 1));
        std::string cell;
        try {
            while (std::getline(ss, cell, ',')) a.push_back(std::stod(cell));
        } catch (const std::logic_error&) {
            throw ConfigError("bad shape '" + v + "'");
        }
        auto at = [&](std::size_t i, double d) { return i < a.size() ? a[i] : d; };
        Curve c;
        if (v[0] == 'c' && a.size() >= 1 && a.size() <= 4)
            c = circle(int(a[0]), at(1, 1.0), at(2, 0.0), at(3, 0.0));
        else if (v[0] == 'e' && a.size() >= 3 && a.size() <= 6)
            c = ellipse(int(a[0]), a[1], a[2], at(3, 0.0), at(4, 0.0), at(5, 0.0));
        else
            throw ConfigError("bad shape '" + v + "'");
        r.input_generated(key, v);
        return c;
    }
    return io::read_curve(r.input_file(key));
}

CurveMetric make_metric(const Run& r) {
    const std::string& m = r.str("metric");
    if (m == "l2") return CurveMetric::L2();
    if (m == "ga") return CurveMetric::GA(r.num("A"));
    if (m == "elastic") return CurveMetric::Elastic(r.num("a"), r.num("b"));
    if (m == "h1scale") return CurveMetric::H1Scale();
    throw ConfigError("unknown metric '" + m + "'");
}

const std::vector<Param> metric_params = {
    {"metric", Type::Text, "ga", "l2, ga (weight 1 + A kappa^2), elastic (a, b) or h1scale"},
    {"A", Type::Real, "0.5", "curvature weight of ga"},
    {"a", Type::Real, "1", "normal coefficient of elastic"},
    {"b", Type::Real, "0.5", "tangential coefficient of elastic"},
};

std::vector<Param> with_metric(std::vector<Param> p) {
    p.insert(p.end(), metric_params.begin(), metric_params.end());
    return p;
}

svg::Polyline outline(const Curve& c, const std::string& label = "") {
    svg::Polyline l;
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
        l.x.push_back(c(j, 0));
        l.y.push_back(c(j, 1));
    }
    l.closed = true;
    l.label = label;
    return l;
}

std::vector<svg::Polyline> path_outlines(const CurvePath& p, int keep = 9) {
    std::vector<svg::Polyline> lines;
    const int m = int(p.curves.size());
    for (int i = 0; i < keep; ++i) {
        int idx = int(std::lround(double(i) * (m - 1) / (keep - 1)));
        lines.push_back(outline(p.curves[idx], i == 0 || i == keep - 1 ? "t = " + io::fmt(p.times[idx]) : ""));
    }
    return lines;
}

void momenta_diagnostics(Run& r, const CurveMetric& m, const CurvePath& p, const EnergyMode& mode) {
    auto M = path_momenta(m, p, mode);
    io::CsvWriter w({"slice", "linear_x", "linear_y", "angular"});
    for (std::size_t k = 0; k < M.angular.size(); ++k) w.row({double(k), M.linear[k][0], M.linear[k][1], M.angular[k]});
    r.save_csv("momenta.csv", w);
    r.diagnostics["linear_momentum_drift"] = M.linear_drift;
    r.diagnostics["angular_momentum_drift"] = M.angular_drift;
    r.diagnostics["linear_momentum_initial"] = {M.linear[0][0], M.linear[0][1]};
    r.diagnostics["angular_momentum_initial"] = M.angular[0];
    r.diagnostics["linear_momentum_drift_abs"] = M.linear_drift_abs;
    r.diagnostics["angular_momentum_drift_abs"] = M.angular_drift_abs;
}

void geodesic(Run& r) {
    Curve c0 = curve_input(r, "source"), c1 = curve_input(r, "target");
    if (r.flag("constant_speed")) {
        c0 = constant_speed(c0);
        c1 = constant_speed(c1);
    }
    CurveMetric m = make_metric(r);
    BvpOptions opt;
    opt.slices = r.integer("slices");
    opt.mode.horizontal = r.flag("horizontal");
    opt.mode.beta = r.num("beta");
    auto res = geodesic_bvp(m, c0, c1, opt);
    r.save_json("path.json", io::path_json(res.path));
    io::CsvWriter h({"iteration", "energy"});
    for (std::size_t i = 0; i < res.history.size(); ++i) h.row({double(i), res.history[i]});
    r.save_csv("history.csv", h);
    r.save_svg("path.svg", path_outlines(res.path), "geodesic (" + m.name() + ")", true);
    r.diagnostics["energy"] = res.energy;
    r.diagnostics["grad_max"] = res.grad_max;
    r.diagnostics["iterations"] = res.iterations;
    r.diagnostics["length"] = path_length(m, res.path, opt.mode.horizontal);
    // middle curve extent across and along the line joining the centroids
    ArcData a0 = arclength_data(c0), a1 = arclength_data(c1);
    Eigen::Vector2d dir = centroid(c1, a1) - centroid(c0, a0);
    if (dir.norm() < 1e-12) dir = Eigen::Vector2d(1, 0);
    dir.normalize();
    Eigen::Vector2d nor(-dir[1], dir[0]);
    const Curve& mid = res.path.curves[res.path.curves.size() / 2];
    Vec across = mid * nor, along = mid * dir;
    r.diagnostics["middle_width"] = across.maxCoeff() - across.minCoeff();
    r.diagnostics["middle_extent_along"] = along.maxCoeff() - along.minCoeff();
    if (m.is_local()) momenta_diagnostics(r, m, res.path, opt.mode);
}

void flow(Run& r) {
    Curve c0 = curve_input(r, "input");
    GradientMetric gm;
    if (r.str("gradient") == "l2")
        gm = GradientMetric::L2;
    else if (r.str("gradient") == "h1")
        gm = GradientMetric::H1Scale;
    else
        throw ConfigError("gradient must be l2 or h1");
    FlowEnergy E;
    if (r.str("energy") == "length")
        E = FlowEnergy::length();
    else if (r.str("energy") == "centroid")
        E = FlowEnergy::centroid(Eigen::Vector2d(r.num("wx"), r.num("wy")));
    else
        throw ConfigError("energy must be length or centroid");
    FlowOptions opt;
    opt.stride = r.integer("stride");
    opt.adaptive = r.flag("adaptive");
    auto res = gradient_flow(gm, E, c0, TimeGrid(0.0, r.num("t1"), r.integer("steps")), opt);
    r.save_json("path.json", io::path_json(res.path));
    io::CsvWriter w({"t", "energy", "length"});
    double rise = 0;
    for (std::size_t i = 0; i < res.energy.size(); ++i) {
        w.row({res.path.times[i], res.energy[i], arclength_data(res.path.curves[i]).length});
        if (i) rise = std::max(rise, res.energy[i] - res.energy[i - 1]);
    }
    r.save_csv("energy.csv", w);
    r.save_svg("path.svg", path_outlines(res.path), "gradient flow", true);
    r.diagnostics["energy_initial"] = res.energy.front();
    r.diagnostics["energy_final"] = res.energy.back();
    r.diagnostics["max_energy_increase"] = rise;
}

Mat smooth_field(std::mt19937_64& rng, Eigen::Index n, int modes) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat h = Mat::Zero(n, 2);
    for (int c = 0; c < 2; ++c)
        for (int k = 0; k <= modes; ++k) {
            double a = N(rng) / (1 + k), b = N(rng) / (1 + k);
            for (Eigen::Index j = 0; j < n; ++j) {
                double t = dtheta(n) * j;
                h(j, c) += a * std::cos(k * t) + b * std::sin(k * t);
            }
        }
    return h;
}

void srvt_cmd(Run& r) {
    Curve c = curve_input(r, "input");
    const Eigen::Index n = c.rows();
    Mat q = srvt(c);
    io::CsvWriter w({"theta", "q0", "q1"});
    for (Eigen::Index j = 0; j < n; ++j) w.row({dtheta(n) * j, q(j, 0), q(j, 1)});
    r.save_csv("srvt.csv", w);
    Mat back = srvt_inverse(q);
    Mat ref = c.rowwise() - c.row(0);
    r.diagnostics["roundtrip_error"] = (back.topRows(n) - ref).cwiseAbs().maxCoeff();
    r.diagnostics["closure_defect"] = closure_defect(q).norm();
    io::CsvWriter g({"sample", "elastic", "flat", "relative_gap"});
    double worst = 0;
    const int samples = r.integer("samples");
    for (int s = 0; s < samples; ++s) {
        Mat h = smooth_field(r.rng, n, 4), k = smooth_field(r.rng, n, 4);
        auto p = srvt_pullback_check(c, h, k, r.num("eps"));
        double gap = std::abs(p.elastic - p.flat) / std::max(std::abs(p.elastic), 1e-300);
        worst = std::max(worst, gap);
        g.row({double(s), p.elastic, p.flat, gap});
    }
    r.save_csv("pullback.csv", g);
    r.diagnostics["pullback_max_relative_gap"] = worst;
    r.save_svg("curve.svg", {outline(c, "curve")}, "input curve", true);
}

void zigzag(Run& r) {
    Curve c0 = curve_input(r, "source"), c1 = curve_input(r, "target");
    ZigzagOptions opt;
    opt.steps_per_phase = r.integer("steps_per_phase");
    opt.nodes_per_tooth = r.integer("nodes_per_tooth");
    const double A = r.num("A");
    const double area = std::abs(enclosed_area(c1) - enclosed_area(c0));
    const double bound = ga_swept_area_bound(A, arclength_data(c0).length, arclength_data(c1).length, area);
    io::CsvWriter w({"teeth", "l2_length", "ga_length", "ga_bound"});
    std::vector<double> teeth, L0, LA;
    CurvePath last;
    for (double t : r.list("teeth")) {
        auto p = zigzag_short_path(c0, c1, int(t), opt);
        teeth.push_back(t);
        L0.push_back(path_length(CurveMetric::L2(), p));
        LA.push_back(path_length(CurveMetric::GA(A), p));
        w.row({t, L0.back(), LA.back(), bound});
        last = std::move(p);
    }
    if (teeth.empty()) throw ConfigError("teeth needs at least one value");
    r.save_csv("lengths.csv", w);
    r.save_svg("lengths.svg", {series(teeth, L0, "L2 length"), series(teeth, LA, "GA length"),
                               series(teeth, std::vector<double>(teeth.size(), bound), "swept-area bound")},
               "zigzag path lengths over teeth", false);
    r.save_svg("zigzag.svg", path_outlines(last, 5), "zigzag path", true);
    bool decreasing = true, above = true;
    for (std::size_t i = 1; i < L0.size(); ++i) decreasing = decreasing && L0[i] < L0[i - 1];
    for (double x : LA) above = above && x > bound;
    r.diagnostics["l2_lengths"] = L0;
    r.diagnostics["ga_lengths"] = LA;
    r.diagnostics["ga_bound"] = bound;
    r.diagnostics["swept_area"] = area;
    r.diagnostics["l2_strictly_decreasing"] = decreasing;
    r.diagnostics["l2_final_over_initial"] = L0.back() / L0.front();
    r.diagnostics["ga_above_bound"] = above;
}

void momenta(Run& r) {
    CurvePath p = io::read_path(r.input_file("input"));
    CurveMetric m = make_metric(r);
    if (!m.is_local()) throw ConfigError("momenta are implemented for the local metrics l2 and ga");
    EnergyMode mode;
    mode.horizontal = r.flag("horizontal");
    mode.beta = r.num("beta");
    momenta_diagnostics(r, m, p, mode);
}

}  // namespace

std::vector<Command> curve_commands() {
    return {
        {"curve", "geodesic", "Solve the geodesic boundary value problem between two curves by path straightening",
         with_metric({{"source", Type::Text, "", "curve file (CSV x,y or JSON samples) or circle:/ellipse: shape"},
                      {"target", Type::Text, "", "curve file or shape, same number of samples"},
                      {"slices", Type::Int, "16", "time slices of the discrete path"},
                      {"horizontal", Type::Bool, "true", "minimize the horizontal energy (local metrics)"},
                      {"beta", Type::Real, "0.01", "tangential weight of the horizontal energy"},
                      {"constant_speed", Type::Bool, "false", "reparametrize both ends to constant speed first"}}),
         geodesic},
        {"curve", "flow", "Gradient flow of the length or a centroid energy",
         {{"input", Type::Text, "", "curve file or shape"},
          {"gradient", Type::Text, "l2", "l2 or h1 (scale-invariant Sobolev gradient)"},
          {"energy", Type::Text, "length", "length or centroid"},
          {"wx", Type::Real, "0", "target centroid x"},
          {"wy", Type::Real, "0", "target centroid y"},
          {"t1", Type::Real, "0.1", "final time"},
          {"steps", Type::Int, "200", "time steps"},
          {"stride", Type::Int, "10", "store every stride-th step"},
          {"adaptive", Type::Bool, "false", "adaptive step size"}},
         flow},
        {"curve", "srvt", "Square root velocity transform with roundtrip and pullback checks",
         {{"input", Type::Text, "", "curve file or shape"},
          {"samples", Type::Int, "20", "random tangent pairs for the pullback check"},
          {"eps", Type::Real, "1e-5", "central difference step"}},
         srvt_cmd},
        {"curve", "zigzag", "Lengths of zigzag paths between two curves over increasing numbers of teeth",
         {{"source", Type::Text, "circle:128,1", "inner curve"},
          {"target", Type::Text, "circle:128,2", "outer curve"},
          {"teeth", Type::List, "4,8,16,32,64", "teeth counts"},
          {"A", Type::Real, "1", "curvature weight for the ga lengths"},
          {"steps_per_phase", Type::Int, "80", "time nodes per phase"},
          {"nodes_per_tooth", Type::Int, "64", "samples per tooth"}},
         zigzag},
        {"curve", "momenta", "Linear and angular momenta along a computed path",
         with_metric({{"input", Type::Text, "", "path JSON written by curve geodesic"},
                      {"horizontal", Type::Bool, "true", "use the horizontal velocity as in the minimized energy"},
                      {"beta", Type::Real, "0.01", "tangential weight of the horizontal energy"}}),
         momenta},
    };
}

}  // namespace cli
