#include "runner.hpp"
#include "shapegeo/diffgroup.hpp"

namespace cli {

using namespace shapegeo;
using namespace shapegeo::diff;

namespace {

InertiaOperator make_operator(const Run& r) {
    if (r.str("preset") == "hs") return InertiaOperator::hs(r.num("s"));
    return named_preset(r.str("preset"));
}

const std::vector<Param> operator_params = {
    {"preset", Type::Text, "camassa_holm",
     "burgers, camassa_holm, hunter_saxton, mu_hs, mclm, weil_petersson, or hs (order s)"},
    {"s", Type::Real, "1", "Sobolev order when preset = hs"},
};

std::vector<Param> with_operator(std::vector<Param> p) {
    p.insert(p.begin(), operator_params.begin(), operator_params.end());
    return p;
}

FourierField read_field(Run& r, const std::string& key) { return io::field_from_json(io::read_json(r.input_file(key))); }

void evolve(Run& r) {
    InertiaOperator L = make_operator(r);
    const int nmax = r.integer("nmax");
    FourierField u0(nmax);
    if (r.given("input")) {
        u0 = read_field(r, "input").resized(nmax);
    } else {
        const int k = r.integer("mode");
        if (k < 0 || k > nmax) throw ConfigError("mode must lie in [0, nmax]");
        const double amp = r.num("amplitude");
        if (r.str("shape") == "sin")
            u0 = FourierField::sin_mode(k, amp).resized(nmax);
        else if (r.str("shape") == "cos")
            u0 = FourierField::cos_mode(k, amp).resized(nmax);
        else
            throw ConfigError("shape must be sin or cos");
    }
    EpdiffOptions opt;
    opt.dispersion = r.num("dispersion");
    opt.track_flow = r.flag("track_flow");
    opt.tail_limit = r.num("tail_limit");
    auto path = integrate_geodesic(L, u0, TimeGrid(0.0, r.num("t1"), r.integer("steps")), opt);

    io::CsvWriter e({"t", "energy", "tail"});
    for (std::size_t i = 0; i < path.times.size(); ++i) e.row({path.times[i], path.energy[i], path.tail[i]});
    r.save_csv("energy.csv", e);
    r.save_json("final_field.json", io::field_json(path.u.back()));
    const int m = fft_size_above(2 * nmax);
    Vec a = path.u.front().nodal(m), b = path.u.back().nodal(m);
    io::CsvWriter prof({"theta", "u_initial", "u_final"});
    std::vector<double> th, ya, yb;
    for (int j = 0; j < m; ++j) {
        th.push_back(2 * pi * j / m);
        ya.push_back(a[j]);
        yb.push_back(b[j]);
        prof.row({th.back(), a[j], b[j]});
    }
    r.save_csv("profile.csv", prof);
    r.save_svg("profile.svg", {series(th, ya, "u(0)"), series(th, yb, "u(t1)")}, "EPDiff velocity (" + L.name() + ")", false);
    r.save_svg("energy.svg", {series(path.times, path.energy, "energy")}, "energy", false);

    r.diagnostics["operator"] = L.name();
    r.diagnostics["energy_initial"] = path.energy.front();
    r.diagnostics["energy_drift"] = max_relative_drift(path.energy);
    r.diagnostics["max_tail"] = *std::max_element(path.tail.begin(), path.tail.end());
    if (opt.track_flow) r.diagnostics["momentum_transport_residual"] = momentum_transport_residual(L, path);
}

FourierField random_field(std::mt19937_64& g, const InertiaOperator& L, int nmax) {
    std::normal_distribution<> d;
    FourierField f(nmax);
    f.a[0] = d(g);
    for (int n = 1; n <= nmax; ++n) f.a[n] = cd(d(g), d(g)) / double(n);
    return pin_kernel(L, f);
}

std::pair<FourierField, FourierField> orthonormal(const InertiaOperator& L, FourierField u, FourierField v) {
    u = (1 / std::sqrt(inner(L, u, u))) * u;
    v = v - inner(L, v, u) * u;
    v = (1 / std::sqrt(inner(L, v, v))) * v;
    return {u, v};
}

void curvature(Run& r) {
    InertiaOperator L = make_operator(r);
    std::vector<std::pair<FourierField, FourierField>> pairs;
    if (r.given("u") || r.given("v")) {
        FourierField u = read_field(r, "u"), v = read_field(r, "v");
        const int n = std::max(u.nmax(), v.nmax());
        pairs.push_back(r.flag("orthonormalize") ? orthonormal(L, pin_kernel(L, u.resized(n)), pin_kernel(L, v.resized(n)))
                                                 : std::make_pair(u.resized(n), v.resized(n)));
    } else {
        const int modes = r.integer("modes"), samples = r.integer("samples");
        std::normal_distribution<> d;
        for (int s = 0; s < samples; ++s) {
            FourierField u(modes), v(modes);
            if (r.str("family") == "random") {
                u = random_field(r.rng, L, modes);
                v = random_field(r.rng, L, modes);
            } else if (r.str("family") == "cophased") {
                // u = sum c_n cos(n theta), v = sum (c_n + noise) sin(n theta)
                for (int n = 1; n <= modes; ++n) {
                    double c = d(r.rng);
                    u.a[n] = 0.5 * c;
                    v.a[n] = cd(0, -0.5 * c + 0.2 * d(r.rng));
                }
                u = pin_kernel(L, u);
                v = pin_kernel(L, v);
            } else {
                throw ConfigError("family must be random or cophased");
            }
            pairs.push_back(orthonormal(L, u, v));
        }
    }
    io::CsvWriter w({"sample", "curvature", "orthonormality_deviation", "tail", "l2_direct"});
    std::vector<double> vals;
    int pos = 0, neg = 0;
    double direct_gap = 0;
    const bool is_l2 = L.kind == InertiaOperator::Kind::L2;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto k = arnold_sectional_curvature(L, pairs[i].first, pairs[i].second, r.integer("band"));
        double direct = is_l2 ? l2_curvature_direct(pairs[i].first, pairs[i].second) : std::nan("");
        if (is_l2) direct_gap = std::max(direct_gap, std::abs(k.value - direct) / std::max(1.0, std::abs(direct)));
        vals.push_back(k.value);
        (k.value > 0 ? pos : neg)++;
        w.row({double(i), k.value, k.orthonormality_deviation, k.tail, direct});
    }
    r.save_csv("curvature.csv", w);
    r.diagnostics["operator"] = L.name();
    r.diagnostics["min"] = *std::min_element(vals.begin(), vals.end());
    r.diagnostics["max"] = *std::max_element(vals.begin(), vals.end());
    r.diagnostics["positive"] = pos;
    r.diagnostics["non_positive"] = neg;
    if (is_l2) r.diagnostics["l2_direct_max_relative_gap"] = direct_gap;
}

void teichon(Run& r) {
    TeichonState s;
    if (r.given("input")) {
        auto j = io::read_json(r.input_file("input"));
        auto q = j.at("q").get<std::vector<double>>(), p = j.at("p").get<std::vector<double>>();
        s.q = Eigen::Map<Vec>(q.data(), q.size());
        s.p = Eigen::Map<Vec>(p.data(), p.size());
    } else {
        auto q = r.list("q"), p = r.list("p");
        s.q = Eigen::Map<Vec>(q.data(), q.size());
        s.p = Eigen::Map<Vec>(p.data(), p.size());
    }
    auto path = teichon_evolve(s, TimeGrid(0.0, r.num("t1"), r.integer("steps")), r.integer("stride"));
    const Eigen::Index n = s.q.size();
    std::vector<std::string> head{"t", "hamiltonian", "momentum", "min_gap"};
    for (Eigen::Index i = 0; i < n; ++i) head.push_back("q" + std::to_string(i));
    for (Eigen::Index i = 0; i < n; ++i) head.push_back("p" + std::to_string(i));
    io::CsvWriter w(head);
    std::vector<double> H, P, gap;
    std::vector<std::vector<double>> qs(n);
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        auto& st = path.states[k];
        H.push_back(teichon_hamiltonian(st));
        P.push_back(st.p.sum());
        gap.push_back(teichon_min_gap(st.q));
        std::vector<double> row{path.times[k], H.back(), P.back(), gap.back()};
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(st.q[i]);
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(st.p[i]);
        for (Eigen::Index i = 0; i < n; ++i) qs[i].push_back(st.q[i]);
        w.row(row);
    }
    r.save_csv("states.csv", w);
    std::vector<svg::Polyline> lines;
    for (Eigen::Index i = 0; i < n; ++i) lines.push_back(series(path.times, qs[i], "q" + std::to_string(i)));
    r.save_svg("positions.svg", lines, "teichon positions", false);
    double dp = 0;
    for (double x : P) dp = std::max(dp, std::abs(x - P.front()));
    r.diagnostics["hamiltonian_initial"] = H.front();
    r.diagnostics["hamiltonian_drift"] = max_relative_drift(H);
    r.diagnostics["momentum_initial"] = P.front();
    // relative when the total momentum is nonzero
    r.diagnostics["momentum_drift"] = std::abs(P.front()) > 0 ? dp / std::abs(P.front()) : dp;
    r.diagnostics["momentum_drift_is_relative"] = std::abs(P.front()) > 0;
    r.diagnostics["min_gap"] = *std::min_element(gap.begin(), gap.end());
}

void sphere_check(Run& r) {
    const int n = r.integer("points"), modes = r.integer("modes"), samples = r.integer("samples");
    const double amp = r.num("amplitude");
    std::uniform_real_distribution<> U(-1, 1);
    io::CsvWriter w({"sample", "constraint", "isometry_ratio", "sphere_curvature"});
    std::vector<double> ratio;
    double worst_c = 0, worst_k = 0;
    for (int s = 0; s < samples; ++s) {
        std::vector<double> c(modes), p(modes), e(modes), q(modes);
        for (int k = 0; k < modes; ++k) {
            c[k] = amp * U(r.rng) / (k + 1);
            p[k] = 3 * U(r.rng);
            e[k] = U(r.rng);
            q[k] = 3 * U(r.rng);
        }
        Vec phi(n), dphi = Vec::Zero(n);
        for (int j = 0; j < n; ++j) {
            double t = 2 * pi * j / n;
            phi[j] = t;
            for (int k = 0; k < modes; ++k) {
                phi[j] += c[k] * std::sin((k + 1) * t + p[k]);
                dphi[j] += e[k] * std::cos((k + 1) * t + q[k]);
            }
        }
        auto res = hs_sphere_check(phi, dphi);
        ratio.push_back(res.isometry_ratio);
        worst_c = std::max(worst_c, std::abs(res.constraint));
        worst_k = std::max(worst_k, std::abs(res.sphere_curvature - 1 / (2 * pi)));
        w.row({double(s), res.constraint, res.isometry_ratio, res.sphere_curvature});
    }
    r.save_csv("sphere_check.csv", w);
    const double lo = *std::min_element(ratio.begin(), ratio.end()), hi = *std::max_element(ratio.begin(), ratio.end());
    double mean = 0;
    for (double x : ratio) mean += x / ratio.size();
    r.diagnostics["max_constraint"] = worst_c;
    r.diagnostics["isometry_ratio_mean"] = mean;
    r.diagnostics["isometry_ratio_relative_spread"] = (hi - lo) / std::abs(mean);
    r.diagnostics["max_curvature_deviation"] = worst_k;
    r.diagnostics["sphere_curvature"] = 1 / (2 * pi);
}

}  // namespace

std::vector<Command> diff_commands() {
    return {
        {"diff", "evolve", "Integrate the EPDiff geodesic equation of a Fourier-multiplier metric on the circle",
         with_operator({{"nmax", Type::Int, "128", "retained Fourier modes"},
                        {"input", Type::Text, "", "initial field JSON {nmax, re, im}; overrides shape/mode/amplitude"},
                        {"shape", Type::Text, "sin", "sin or cos initial mode"},
                        {"mode", Type::Int, "1", "wavenumber of the initial mode"},
                        {"amplitude", Type::Real, "0.1", "amplitude of the initial mode"},
                        {"t1", Type::Real, "5", "final time"},
                        {"steps", Type::Int, "50", "output intervals (each is subdivided as needed)"},
                        {"dispersion", Type::Real, "0", "central-extension coefficient"},
                        {"track_flow", Type::Bool, "true", "co-integrate the flow for the momentum transport check"},
                        {"tail_limit", Type::Real, "1e-3", "largest allowed energy fraction in the top third of modes"}}),
         evolve},
        {"diff", "curvature", "Arnold sectional curvature of the right-invariant metric",
         with_operator({{"u", Type::Text, "", "first field JSON (with v); otherwise random pairs"},
                        {"v", Type::Text, "", "second field JSON"},
                        {"orthonormalize", Type::Bool, "true", "Gram-Schmidt the given pair first"},
                        {"samples", Type::Int, "20", "random pairs"},
                        {"modes", Type::Int, "8", "modes of the random pairs"},
                        {"family", Type::Text, "random", "random or cophased (cosine/sine pairs with shared phases)"},
                        {"band", Type::Int, "0", "cap on intermediate modes (0 keeps all)"}}),
         curvature},
        {"diff", "teichon", "Evolve Weil-Petersson teichons (point-mass momenta on the circle)",
         {{"input", Type::Text, "", "JSON {q: [...], p: [...]}; otherwise q and p below"},
          {"q", Type::List, "0,3", "positions"},
          {"p", Type::List, "1,0.5", "momenta"},
          {"t1", Type::Real, "5", "final time"},
          {"steps", Type::Int, "5000", "RK4 steps"},
          {"stride", Type::Int, "10", "store every stride-th step"}},
         teichon},
        {"diff", "sphere-check", "Check that phi -> sqrt(phi') maps the H1-dot quotient isometrically onto a sphere",
         {{"samples", Type::Int, "20", "random (phi, variation) pairs"},
          {"points", Type::Int, "512", "grid points"},
          {"modes", Type::Int, "4", "Fourier modes of phi and of the variation"},
          {"amplitude", Type::Real, "0.2", "size of phi - id"}},
         sphere_check},
    };
}

}  // namespace cli
