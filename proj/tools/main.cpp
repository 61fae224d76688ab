#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "runner.hpp"

namespace cli {

namespace io = shapegeo::io;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

const char* type_name(Type t) {
    switch (t) {
        case Type::Real: return "real";
        case Type::Int: return "int";
        case Type::Bool: return "bool";
        case Type::List: return "list";
        default: return "text";
    }
}

}  // namespace

std::vector<double> Run::list(const std::string& k) const {
    std::vector<double> v;
    std::stringstream ss(raw(k));
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    return v;
}

void validate(const Param& p, const std::string& v) {
    auto bad = [&] { throw ConfigError("parameter '" + p.key + "' expects " + type_name(p.type) + ", got '" + v + "'"); };
    if (v.empty()) return;
    try {
        std::size_t pos = 0;
        switch (p.type) {
            case Type::Real:
                std::stod(v, &pos);
                if (pos != v.size()) bad();
                break;
            case Type::Int:
                std::stoi(v, &pos);
                if (pos != v.size()) bad();
                break;
            case Type::Bool:
                if (v != "true" && v != "false") bad();
                break;
            case Type::List: {
                std::stringstream ss(v);
                std::string cell;
                while (std::getline(ss, cell, ',')) {
                    std::stod(cell, &pos);
                    if (pos != cell.size()) bad();
                }
                break;
            }
            default: break;
        }
    } catch (const std::logic_error&) {
        bad();
    }
}

json typed_value(const Param& p, const std::string& v) {
    if (v.empty()) return nullptr;
    switch (p.type) {
        case Type::Real: return std::stod(v);
        case Type::Int: return std::stoi(v);
        case Type::Bool: return v == "true";
        case Type::List: {
            json a = json::array();
            std::stringstream ss(v);
            std::string cell;
            while (std::getline(ss, cell, ',')) a.push_back(std::stod(cell));
            return a;
        }
        default: return v;
    }
}

std::string Run::input_file(const std::string& k) {
    const std::string& given_path = raw(k);
    if (given_path.empty()) throw ConfigError("parameter '" + k + "' needs a file");
    fs::path p(given_path);
    auto it = base_dir.find(k);
    if (p.is_relative() && it != base_dir.end() && !it->second.empty()) p = it->second / p;
    std::string text = io::read_text(p.string());
    inputs.push_back({{"key", k}, {"path", given_path}, {"fnv1a", io::hex64(io::fnv1a(text))}});
    return p.string();
}

void Run::input_generated(const std::string& k, const std::string& spec) {
    inputs.push_back({{"key", k}, {"generated", spec}, {"fnv1a", io::hex64(io::fnv1a(spec))}});
}

void Run::save_json(const std::string& name, const json& j) {
    io::write_json((out / name).string(), j);
    outputs.insert(name);
}

void Run::save_csv(const std::string& name, const io::CsvWriter& w) {
    w.save((out / name).string());
    outputs.insert(name);
}

void Run::save_svg(const std::string& name, const std::vector<shapegeo::svg::Polyline>& lines, const std::string& title,
                   bool equal_aspect) {
    if (!plot) return;
    io::write_text((out / name).string(), shapegeo::svg::render(lines, title, equal_aspect));
    outputs.insert(name);
}

double max_relative_drift(const std::vector<double>& v) {
    double d = 0, ref = std::abs(v.front());
    for (double x : v) d = std::max(d, std::abs(x - v.front()) / (ref > 0 ? ref : 1.0));
    return d;
}

shapegeo::svg::Polyline series(const std::vector<double>& x, const std::vector<double>& y, const std::string& label) {
    shapegeo::svg::Polyline l;
    l.x = x;
    l.y = y;
    l.label = label;
    return l;
}

}  // namespace cli

using namespace cli;

namespace {

struct Settings {
    std::vector<std::string> configs, sets;
    std::string out;
    bool plot = false;
    int jobs = 1;
    std::uint64_t seed = 1;
    bool seed_given = false;
};

struct Job {
    std::string config;  // empty: command line only
    fs::path out;
};

std::mutex print_mutex;

const Command* find_command(const std::vector<Command>& all, const std::string& full) {
    for (auto& c : all)
        if (c.full() == full) return &c;
    return nullptr;
}

// Builds the run for one config; throws ConfigError on any inconsistency.
Run resolve(const std::vector<Command>& all, const std::string& cli_command, const Settings& s, const Job& job) {
    std::map<std::string, std::string> kv;
    fs::path cfg_dir;
    if (!job.config.empty()) {
        kv = io::parse_config(io::read_text(job.config), job.config);
        cfg_dir = fs::path(job.config).parent_path();
    }
    std::string full = cli_command;
    if (kv.count("command")) {
        std::string c = kv["command"];
        if (!full.empty() && c != full) throw ConfigError(job.config + " is a '" + c + "' experiment, not '" + full + "'");
        full = c;
    }
    if (full.empty()) throw ConfigError("no command given on the command line or in the config");
    const Command* cmd = find_command(all, full);
    if (!cmd) throw ConfigError("unknown command '" + full + "'");

    Run r;
    r.cmd = cmd;
    for (auto& p : cmd->params) r.values[p.key] = p.def;
    const std::string table = cmd->group + "." + cmd->name + ".";
    auto assign = [&](const std::string& key, const std::string& value, const fs::path& dir, const std::string& where) {
        const Param* p = nullptr;
        for (auto& q : cmd->params)
            if (q.key == key) p = &q;
        if (!p) throw ConfigError(where + ": unknown parameter '" + key + "' for " + full);
        validate(*p, value);
        r.values[key] = value;
        r.base_dir[key] = dir;
    };
    std::uint64_t seed = s.seed;
    bool seed_set = s.seed_given;
    std::string cfg_out;
    // root keys first so that the command's own table wins
    for (auto& [k, v] : kv) {
        if (k == "command" || k.rfind(table, 0) == 0) continue;
        if (k == "out") {
            cfg_out = v;
            continue;
        }
        if (k == "seed") {
            if (!seed_set) seed = std::stoull(v);
            continue;
        }
        if (k.find('.') != std::string::npos) {
            // tables of other commands may share the file
            bool other = false;
            for (auto& c : all)
                if (k.rfind(c.group + "." + c.name + ".", 0) == 0) other = true;
            if (other) continue;
            throw ConfigError(job.config + ": unknown key '" + k + "'");
        }
        assign(k, v, cfg_dir, job.config);
    }
    for (auto& [k, v] : kv)
        if (k.rfind(table, 0) == 0) assign(k.substr(table.size()), v, cfg_dir, job.config);
    for (auto& kvs : s.sets) {
        auto eq = kvs.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kvs + "'");
        std::string k = trim(kvs.substr(0, eq)), v = trim(kvs.substr(eq + 1));
        if (k.rfind(table, 0) == 0) k = k.substr(table.size());
        assign(k, v, fs::path(), "--set");
    }
    r.seed = seed;
    r.rng.seed(seed);
    r.plot = s.plot;
    r.out = job.out;
    if (r.out.empty()) {
        if (!cfg_out.empty()) {
            fs::path p(cfg_out);
            r.out = p.is_relative() ? cfg_dir / p : p;
        } else {
            r.out = "out";
        }
    }
    return r;
}

json manifest(const Run& r) {
    json params = json::object();
    for (auto& p : r.cmd->params) params[p.key] = typed_value(p, r.values.at(p.key));
    std::string joined;
    for (auto& in : r.inputs) joined += in["key"].get<std::string>() + "=" + in["fnv1a"].get<std::string>() + ";";
    json outs = json::array();
    for (auto& o : r.outputs) outs.push_back(o);
    return {{"status", "ok"},
            {"command", r.cmd->full()},
            {"parameters", params},
            {"seed", r.seed},
            {"plot", r.plot},
            {"inputs", r.inputs},
            {"inputs_hash", io::hex64(io::fnv1a(joined))},
            {"outputs", outs},
            {"diagnostics", r.diagnostics}};
}

void write_error(const fs::path& out, const std::string& command, const std::string& kind, const std::string& msg) {
    std::error_code ec;
    fs::create_directories(out, ec);
    fs::remove(out / "manifest.json", ec);
    json e{{"status", "error"}, {"kind", kind}, {"message", msg}, {"command", command}};
    try {
        io::write_json((out / "error.json").string(), e);
    } catch (...) {
    }
    std::lock_guard<std::mutex> lock(print_mutex);
    std::cerr << "error [" << kind << "]: " << msg << "\n";
}

// 0 success, 1 config/usage error, 2 module error, 3 anything else.
int run_one(const std::vector<Command>& all, const std::string& cli_command, const Settings& s, const Job& job) {
    fs::path out = job.out.empty() ? fs::path(s.out.empty() ? "out" : s.out) : job.out;
    std::string command = cli_command;
    Run r;
    try {
        r = resolve(all, cli_command, s, job);
    } catch (const shapegeo::Error& e) {
        write_error(out, command, e.kind() == "format_error" ? "config_error" : e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        write_error(out, command, "config_error", e.what());
        return 1;
    }
    out = r.out;
    command = r.cmd->full();
    try {
        fs::create_directories(r.out);
        std::error_code ec;
        fs::remove(r.out / "error.json", ec);
        fs::remove(r.out / "manifest.json", ec);
        r.cmd->body(r);
        io::write_json((r.out / "manifest.json").string(), manifest(r));
    } catch (const ConfigError& e) {
        write_error(out, command, e.kind(), e.what());
        return 1;
    } catch (const shapegeo::Error& e) {
        write_error(out, command, e.kind(), e.what());
        return 2;
    } catch (const std::exception& e) {
        write_error(out, command, "internal_error", e.what());
        return 3;
    }
    std::lock_guard<std::mutex> lock(print_mutex);
    std::cout << (r.out / "manifest.json").string() << "\n";
    return 0;
}

std::string param_footer(const Command& c) {
    std::ostringstream s;
    s << "Parameters (config table [" << c.group << "." << c.name << "] or --set key=value):\n";
    for (auto& p : c.params) {
        s << "  " << p.key << " (" << type_name(p.type) << ", default " << (p.def.empty() ? "none" : p.def) << ")\n      "
          << p.help << "\n";
    }
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<Command> all;
    for (auto f : {landmark_commands, curve_commands, diff_commands, met_commands}) {
        auto v = f();
        all.insert(all.end(), v.begin(), v.end());
    }

    CLI::App app{"Riemannian shape-space experiments: landmarks, curves, diffeomorphisms of the circle, metrics"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    Settings s;
    app.add_option("--config", s.configs, "Experiment config file (repeatable; each file is one experiment)");
    app.add_option("--set", s.sets, "Override a parameter, key=value (repeatable)");
    app.add_option("--out", s.out, "Output directory (default out; with several configs out/<config stem>)");
    app.add_flag("--plot", s.plot, "Also write SVG plots");
    app.add_option("--jobs", s.jobs, "Run up to N configs concurrently (capped by SHAPEGEO_THREADS)")->check(CLI::PositiveNumber);
    auto seed_opt = app.add_option("--seed", s.seed, "Seed for randomized sweeps (default 1)");

    std::string chosen;
    struct FlagOpt {
        std::string command, key;
        CLI::Option* opt;
        std::string* value;
    };
    std::map<std::string, std::string> flag_values;
    std::vector<FlagOpt> flag_opts;
    std::map<std::string, CLI::App*> groups;
    for (auto& c : all) {
        if (!groups.count(c.group)) {
            auto g = app.add_subcommand(c.group, c.group + " experiments");
            g->fallthrough();
            g->require_subcommand(1);
            groups[c.group] = g;
        }
        auto sub = groups[c.group]->add_subcommand(c.name, c.summary);
        sub->fallthrough();
        sub->footer(param_footer(c));
        sub->callback([&chosen, full = c.full()] { chosen = full; });
        // every parameter is also a flag of its subcommand, e.g. --preset camassa_holm
        for (auto& p : c.params) {
            auto& slot = flag_values[c.full() + "|" + p.key];
            flag_opts.push_back({c.full(), p.key, sub->add_option("--" + p.key, slot, p.help), &slot});
        }
    }
    CLI11_PARSE(app, argc, argv);
    s.seed_given = seed_opt->count() > 0;
    for (auto& f : flag_opts)
        if (f.command == chosen && f.opt->count() > 0) s.sets.push_back(f.key + "=" + *f.value);

    std::vector<Job> jobs;
    if (s.configs.empty()) {
        jobs.push_back({"", s.out.empty() ? fs::path() : fs::path(s.out)});
    } else if (s.configs.size() == 1) {
        jobs.push_back({s.configs[0], s.out.empty() ? fs::path() : fs::path(s.out)});
    } else {
        fs::path base = s.out.empty() ? fs::path("out") : fs::path(s.out);
        std::set<std::string> stems;
        for (auto& c : s.configs) {
            std::string stem = fs::path(c).stem().string();
            if (!stems.insert(stem).second) {
                std::cerr << "error [config_error]: two configs share the stem '" << stem << "'\n";
                return 1;
            }
            jobs.push_back({c, base / stem});
        }
    }

    int workers = std::max(1, s.jobs);
    if (const char* env = std::getenv("SHAPEGEO_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) workers = std::min(workers, cap);
    }
    workers = std::min<int>(workers, int(jobs.size()));

    std::vector<int> status(jobs.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < jobs.size();) status[i] = run_one(all, chosen, s, jobs[i]);
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return *std::max_element(status.begin(), status.end());
}
