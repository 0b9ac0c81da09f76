#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fracshape/audit.hpp"
#include "fracshape/errors.hpp"
#include "fracshape/experiments.hpp"

namespace {

enum ExitCode { ok = 0, failure = 1, invalid = 2, checks_failed = 3 };

struct Invocation {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    bool list_checks = false;
};

void report_error(const std::string& type, const std::string& message, const std::string& field = {}) {
    fracshape::Json j{{"error", type}, {"message", message}};
    if (!field.empty()) j["field"] = field;
    std::cerr << j.dump() << "\n";
}

int run(const std::string& command, const Invocation& inv) {
    using namespace fracshape;
    if (inv.list_checks) {
        for (const auto& c : list_checks()) fmt::print("{:<28} {}\n", c.name, c.description);
        return ok;
    }
    if (inv.config.empty()) {
        report_error("parameter", "--config is required", "config");
        return invalid;
    }
    try {
        Json doc;
        try {
            doc = Json::parse(read_text_file(inv.config));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParameterError("config", std::string("invalid JSON: ") + e.what());
        }
        const std::string kind = command == "audit" ? "bounds-audit" : command;
        if (!doc.is_object()) throw ParameterError("config", "must be an object");
        if (!doc.contains("kind")) doc["kind"] = kind;
        if (doc["kind"] != kind)
            throw ParameterError("kind", fmt::format("config kind {} does not match subcommand {}", doc["kind"].dump(), command));
        if (!inv.seeds.empty()) doc["seeds"] = inv.seeds;
        if (!inv.out.empty()) doc["output_dir"] = inv.out;
        const ExperimentConfig cfg = parse_config(doc);
        const ReportBundle bundle = run_experiment(cfg);
        fmt::print("{}\n", Json{{"output_dir", bundle.output_dir.string()},
                                 {"files", bundle.files.size()},
                                 {"passed", bundle.passed},
                                 {"summary", bundle.summary}}
                               .dump());
        return bundle.passed ? ok : checks_failed;
    } catch (const ParameterError& e) {
        report_error("parameter", e.what(), e.field());
        return invalid;
    } catch (const StructuralError& e) {
        report_error("structural", e.what());
        return invalid;
    } catch (const NumericError& e) {
        report_error("numeric", e.what());
        return failure;
    } catch (const std::exception& e) {
        report_error("runtime", e.what());
        return failure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional Dirichlet spectral shape-optimization lab"};
    app.require_subcommand(1);
    const std::vector<std::pair<std::string, std::string>> commands{
        {"grid", "describe a grid and optional mask"},
        {"eig", "smallest eigenpairs on a mask"},
        {"torsion", "torsion function on a mask"},
        {"two-ball", "two balls against one half-volume ball"},
        {"minimize", "volume-constrained annealing of a spectral functional"},
        {"classify", "trichotomy classification of a synthetic sequence"},
        {"lieb", "translation search on random mask pairs"},
        {"audit", "inequality suite on random instances"},
    };
    std::map<std::string, Invocation> invocations;
    for (const auto& [name, help] : commands) {
        Invocation& inv = invocations[name];
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", inv.config, "JSON configuration file");
        sub->add_option("--out", inv.out, "output directory (overrides output_dir)");
        sub->add_option("--seed", inv.seeds, "seed list (overrides seeds)");
        if (name == "audit") sub->add_flag("--list-checks", inv.list_checks, "list the audit checks and exit");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : invalid;
    }
    for (const auto& [name, help] : commands)
        if (app.got_subcommand(name)) return run(name, invocations[name]);
    return invalid;
}
