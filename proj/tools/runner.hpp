#pragma once
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "shapegeo/io.hpp"
#include "shapegeo/svg.hpp"

namespace cli {

namespace fs = std::filesystem;
using shapegeo::io::json;

class ConfigError : public shapegeo::Error {
public:
    explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

enum class Type { Real, Int, Bool, Text, List };

struct Param {
    std::string key;
    Type type;
    std::string def;  // empty for required inputs
    std::string help;
};

struct Run;

struct Command {
    std::string group, name, summary;
    std::vector<Param> params;
    std::function<void(Run&)> body;
    std::string full() const { return group + " " + name; }
};

// One experiment: resolved parameters, recorded inputs, output directory and diagnostics.
struct Run {
    const Command* cmd = nullptr;
    std::map<std::string, std::string> values;
    std::map<std::string, fs::path> base_dir;  // where relative paths of a key resolve
    fs::path out;
    bool plot = false;
    std::uint64_t seed = 0;
    std::mt19937_64 rng;

    json inputs = json::array();
    json diagnostics = json::object();
    std::set<std::string> outputs;

    const Param& param(const std::string& k) const {
        for (auto& p : cmd->params)
            if (p.key == k) return p;
        throw ConfigError("no parameter '" + k + "' for " + cmd->full());
    }
    const std::string& raw(const std::string& k) const {
        param(k);
        return values.at(k);
    }
    bool given(const std::string& k) const { return !raw(k).empty(); }
    double num(const std::string& k) const { return std::stod(raw(k)); }
    int integer(const std::string& k) const { return std::stoi(raw(k)); }
    bool flag(const std::string& k) const { return raw(k) == "true"; }
    const std::string& str(const std::string& k) const { return raw(k); }
    std::vector<double> list(const std::string& k) const;

    // Path of a file-valued parameter; the file content is hashed into the manifest.
    std::string input_file(const std::string& k);
    // Records a synthetic input (a shape generator string) by hashing its text.
    void input_generated(const std::string& k, const std::string& spec);

    void save_json(const std::string& name, const json& j);
    void save_csv(const std::string& name, const shapegeo::io::CsvWriter& w);
    void save_svg(const std::string& name, const std::vector<shapegeo::svg::Polyline>& lines, const std::string& title,
                  bool equal_aspect);
};

// Parses and type-checks a parameter value.
void validate(const Param& p, const std::string& v);
json typed_value(const Param& p, const std::string& v);

std::vector<Command> landmark_commands();
std::vector<Command> curve_commands();
std::vector<Command> diff_commands();
std::vector<Command> met_commands();

// Helpers shared by the command files.
double max_relative_drift(const std::vector<double>& v);
shapegeo::svg::Polyline series(const std::vector<double>& x, const std::vector<double>& y, const std::string& label);

}  // namespace cli
