#include "runner.hpp"
#include "shapegeo/landmarks.hpp"

namespace cli {

using namespace shapegeo;
using namespace shapegeo::landmarks;

namespace {

const std::vector<Param> kernel_params = {
    {"kernel", Type::Text, "gaussian", "gaussian or bessel (Sobolev kernel of (1 - Laplacian)^order)"},
    {"sigma", Type::Real, "1", "kernel length scale"},
    {"order", Type::Int, "2", "Sobolev order of the bessel kernel"},
};

std::vector<Param> with_kernel(std::vector<Param> p) {
    p.insert(p.end(), kernel_params.begin(), kernel_params.end());
    return p;
}

Kernel make_kernel(const Run& r, int dim) {
    const std::string& k = r.str("kernel");
    if (k == "gaussian") return Kernel::gaussian(r.num("sigma"), dim);
    if (k == "bessel") return Kernel::sobolev_bessel(r.integer("order"), dim, r.num("sigma"));
    throw ConfigError("unknown kernel '" + k + "'");
}

struct Trajectory {
    io::CsvWriter traj, energy;
    std::vector<std::vector<double>> xs, ys;
    std::vector<double> H, sep, times;
};

Trajectory record(const Kernel& k, const ODESolution& sol, Eigen::Index n, Eigen::Index d) {
    std::vector<std::string> head{"t", "landmark"};
    for (Eigen::Index a = 0; a < d; ++a) head.push_back("q" + std::to_string(a));
    for (Eigen::Index a = 0; a < d; ++a) head.push_back("p" + std::to_string(a));
    Trajectory t{io::CsvWriter(head), io::CsvWriter({"t", "hamiltonian", "min_separation"}), {}, {}, {}, {}, {}};
    t.xs.resize(n);
    t.ys.resize(n);
    for (std::size_t s = 0; s < sol.size(); ++s) {
        State st = unpack(sol.states[s], n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            std::vector<double> row{sol.times[s], double(i)};
            for (Eigen::Index a = 0; a < d; ++a) row.push_back(st.q(i, a));
            for (Eigen::Index a = 0; a < d; ++a) row.push_back(st.p(i, a));
            t.traj.row(row);
            t.xs[i].push_back(st.q(i, 0));
            t.ys[i].push_back(d > 1 ? st.q(i, 1) : sol.times[s]);
        }
        t.times.push_back(sol.times[s]);
        t.H.push_back(hamiltonian(k, st));
        t.sep.push_back(n > 1 ? min_pairwise_distance(st.q) : 0.0);
        t.energy.row({sol.times[s], t.H.back(), t.sep.back()});
    }
    return t;
}

void save_trajectory(Run& r, Trajectory& t, const std::string& title) {
    r.save_csv("trajectory.csv", t.traj);
    r.save_csv("energy.csv", t.energy);
    std::vector<svg::Polyline> lines;
    for (std::size_t i = 0; i < t.xs.size(); ++i) lines.push_back(series(t.xs[i], t.ys[i], "landmark " + std::to_string(i)));
    r.save_svg("trajectories.svg", lines, title, true);
    r.diagnostics["hamiltonian_initial"] = t.H.front();
    r.diagnostics["hamiltonian_drift"] = max_relative_drift(t.H);
    if (t.xs.size() > 1) {
        const double mn = *std::min_element(t.sep.begin(), t.sep.end());
        r.diagnostics["initial_separation"] = t.sep.front();
        r.diagnostics["final_separation"] = t.sep.back();
        r.diagnostics["min_separation"] = mn;
    }
}

void shoot(Run& r) {
    auto f = io::read_landmarks(r.input_file("input"));
    if (f.momenta.size() == 0) throw io::FormatError("landmark shoot needs momenta in the input");
    const Eigen::Index n = f.points.rows(), d = f.points.cols();
    Kernel k = make_kernel(r, int(d));
    check_distinct(k, f.points);
    TimeGrid grid(0.0, r.num("t1"), r.integer("steps"));
    auto sol = geodesic_shoot(k, State{f.points, f.momenta}, grid, r.integer("stride"));
    auto t = record(k, sol, n, d);
    State end = unpack(sol.back(), n, d);
    r.save_json("final.json", io::landmarks_json(end.q, &end.p));
    save_trajectory(r, t, "landmark geodesic");
    if (n > 1) r.diagnostics["paths_approach"] = t.sep.back() < t.sep.front();
}

void match(Run& r) {
    auto a = io::read_landmarks(r.input_file("source"));
    auto b = io::read_landmarks(r.input_file("target"));
    const Eigen::Index n = a.points.rows(), d = a.points.cols();
    Kernel k = make_kernel(r, int(d));
    MatchOptions opt;
    opt.grid = TimeGrid(0.0, 1.0, r.integer("steps"));
    opt.max_iter = r.integer("max_iter");
    opt.tol = r.num("tol");
    opt.accept = r.num("accept");
    auto m = geodesic_match(k, a.points, b.points, opt);
    auto sol = geodesic_shoot(k, State{a.points, m.p0}, opt.grid, r.integer("stride"));
    auto t = record(k, sol, n, d);
    r.save_json("momenta.json", io::landmarks_json(a.points, &m.p0));
    save_trajectory(r, t, "landmark matching geodesic");
    r.diagnostics["residual"] = m.residual;
    r.diagnostics["iterations"] = m.iterations;
    r.diagnostics["endpoint_error"] = (unpack(sol.back(), n, d).q - b.points).cwiseAbs().maxCoeff();
    if (n > 1) {
        // attraction: the paths come closer than at either end
        const double mn = *std::min_element(t.sep.begin(), t.sep.end());
        r.diagnostics["paths_attract"] = mn < std::min(t.sep.front(), t.sep.back()) - 1e-12;
    }
}

void curvature(Run& r) {
    Kernel k = make_kernel(r, 1);
    const double r0 = r.num("rho_min"), r1 = r.num("rho_max");
    const int cnt = r.integer("count");
    if (!(r1 > r0 && r0 > 0) || cnt < 2) throw ConfigError("need 0 < rho_min < rho_max and count >= 2");
    io::CsvWriter w({"rho", "curvature"});
    std::vector<double> rho, kv;
    json crossings = json::array();
    for (int i = 0; i < cnt; ++i) {
        double x = r0 + (r1 - r0) * i / (cnt - 1);
        double v = sectional_curvature_two_landmarks(k, x);
        if (!kv.empty() && (kv.back() < 0) != (v < 0))
            crossings.push_back(rho.back() + (x - rho.back()) * kv.back() / (kv.back() - v));
        rho.push_back(x);
        kv.push_back(v);
        w.row({x, v});
    }
    r.save_csv("curvature.csv", w);
    r.save_svg("curvature.svg", {series(rho, kv, "K(rho)")}, "two-landmark sectional curvature", false);
    r.diagnostics["min"] = *std::min_element(kv.begin(), kv.end());
    r.diagnostics["max"] = *std::max_element(kv.begin(), kv.end());
    r.diagnostics["sign_changes"] = crossings.size();
    r.diagnostics["zero_crossings"] = crossings;
}

}  // namespace

std::vector<Command> landmark_commands() {
    return {
        {"landmark", "shoot", "Integrate the landmark geodesic equations from points and momenta",
         with_kernel({{"input", Type::Text, "", "landmark JSON with points and momenta"},
                      {"t1", Type::Real, "1", "final time"},
                      {"steps", Type::Int, "1000", "RK4 steps"},
                      {"stride", Type::Int, "10", "store every stride-th step"}}),
         shoot},
        {"landmark", "match", "Find the initial momenta of the geodesic joining two configurations",
         with_kernel({{"source", Type::Text, "", "landmark file at t = 0"},
                      {"target", Type::Text, "", "landmark file at t = 1"},
                      {"steps", Type::Int, "200", "RK4 steps on [0, 1]"},
                      {"max_iter", Type::Int, "60", "Newton iterations"},
                      {"tol", Type::Real, "1e-10", "target residual (max norm)"},
                      {"accept", Type::Real, "1e-6", "largest residual counted as success"},
                      {"stride", Type::Int, "1", "store every stride-th step"}}),
         match},
        {"landmark", "curvature", "Sweep the sectional curvature of two landmarks on a line over their distance",
         with_kernel({{"rho_min", Type::Real, "0.1", "smallest separation"},
                      {"rho_max", Type::Real, "4", "largest separation"},
                      {"count", Type::Int, "80", "number of separations"}}),
         curvature},
    };
}

}  // namespace cli
