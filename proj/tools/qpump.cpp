#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qpump/experiments/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A config file is either TOML or a previously written manifest.json, whose
// resolved config is replayed as-is.
json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    if (fs::path(path).extension() == ".json") {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read config " + path);
        json j = json::parse(in);
        if (j.contains("config")) j = j.at("config");
        return j;
    }
    return qpump::config::load_toml(path);
}

fs::path output_dir(const std::string& flag, const std::string& name) {
    if (!flag.empty()) return flag;
    const char* root = std::getenv("QPUMP_OUTPUT_ROOT");
    return fs::path(root ? root : "runs") / name;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear Thouless pumping of gap solitons"};
    app.set_version_flag("--version", std::string(qpump::kVersion));
    app.require_subcommand(1);

    std::string config_path, preset, out;
    std::vector<std::string> overrides;
    int jobs = 1;
    std::string axis;
    std::vector<std::string> values;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "TOML config file or a manifest.json to replay");
        c->add_option("--preset", preset, "named preset (see list-presets)");
        c->add_option("--override", overrides, "key=value, repeatable")->take_all();
    };

    auto* run = app.add_subcommand("run", "run one experiment");
    add_common(run);
    run->add_option("--out", out, "output directory (default $QPUMP_OUTPUT_ROOT/<experiment>)");

    auto* sw = app.add_subcommand("sweep", "run one experiment per axis value");
    add_common(sw);
    sw->add_option("--out", out, "output directory");
    sw->add_option("--axis", axis, "dotted config key to vary")->required();
    sw->add_option("--values", values, "axis values")->take_all();
    sw->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

    auto* lp = app.add_subcommand("list-presets", "list named presets");
    bool show = false;
    lp->add_flag("--show", show, "print the resolved defaults");

    auto* val = app.add_subcommand("validate", "resolve and validate a config without running");
    add_common(val);

    CLI11_PARSE(app, argc, argv);

    try {
        if (lp->parsed()) {
            for (const auto& p : qpump::presets::all()) {
                std::cout << p.name << "  " << p.description << '\n';
                if (show) std::cout << qpump::presets::defaults(p.name).dump(2) << '\n';
            }
            return 0;
        }
        const json file = load_config_file(config_path);
        if (val->parsed()) {
            const json cfg = qpump::presets::resolve(preset, file, overrides);
            qpump::runner::validate(cfg);
            std::cout << cfg.dump(2) << '\n';
            return 0;
        }
        if (run->parsed()) {
            const json cfg = qpump::presets::resolve(preset, file, overrides);
            const fs::path dir = output_dir(out, cfg.at("experiment").get<std::string>());
            const auto rep = qpump::runner::run(cfg, dir);
            const auto& m = rep.manifest;
            std::cout << "status: " << m.at("status").get<std::string>() << "  (" << dir.string() << ")\n";
            if (m.contains("error")) std::cerr << "error: " << m.at("error").get<std::string>() << '\n';
            for (const auto& [k, v] : m.at("checks").items()) {
                std::cout << (v.at("pass").get<bool>() ? "  PASS " : "  FAIL ") << k << '\n';
            }
            return rep.exit_code;
        }
        if (sw->parsed()) {
            const std::string name = preset.empty() ? file.value("experiment", std::string("custom")) : preset;
            const fs::path dir = output_dir(out, name + "_sweep");
            const auto pts = qpump::runner::sweep(preset, file, overrides, axis, values, jobs, dir);
            int code = 0;
            for (const auto& p : pts) {
                std::cout << axis << "=" << p.value << "  " << p.status;
                if (!p.error.empty()) std::cout << "  " << p.error;
                std::cout << '\n';
                code = std::max(code, p.exit_code == 1 ? 2 : p.exit_code);
            }
            return code;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
