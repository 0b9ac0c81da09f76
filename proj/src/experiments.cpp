#include "fracshape/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>
#include <fmt/format.h>

#include "fracshape/audit.hpp"
#include "fracshape/errors.hpp"

#ifndef FRACSHAPE_VERSION
#define FRACSHAPE_VERSION "unknown"
#endif

namespace fracshape {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
    static const std::vector<std::pair<ExperimentKind, std::string>> names{
        {ExperimentKind::grid, "grid"},         {ExperimentKind::eig, "eig"},
        {ExperimentKind::torsion, "torsion"},   {ExperimentKind::two_ball, "two-ball"},
        {ExperimentKind::minimize, "minimize"}, {ExperimentKind::classify, "classify"},
        {ExperimentKind::lieb, "lieb"},         {ExperimentKind::bounds_audit, "bounds-audit"},
    };
    return names;
}

void reject_unknown(const Json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ParameterError(prefix.empty() ? "config" : prefix, "must be an object");
    for (const auto& [key, value] : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ParameterError(prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
}

template <class T>
T get_as(const Json& obj, const char* key, const std::string& path) {
    const Json& v = obj.at(key);
    try {
        if constexpr (std::is_same_v<T, int>) {
            if (!v.is_number_integer()) throw ParameterError(path, "must be an integer");
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ParameterError(path, "must be a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ParameterError(path, "must be a string");
        }
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParameterError(path, "has the wrong type");
    }
}

template <class T>
void read_opt(const Json& obj, const char* key, const std::string& prefix, T& out) {
    if (obj.contains(key)) out = get_as<T>(obj, key, prefix + "." + key);
}

std::vector<double> get_reals(const Json& obj, const char* key, const std::string& path) {
    const Json& v = obj.at(key);
    if (!v.is_array()) throw ParameterError(path, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ParameterError(path, "must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

Point get_point(const Json& v, const std::string& path) {
    if (!v.is_array() || v.empty() || v.size() > 2) throw ParameterError(path, "must be an array of 1 or 2 numbers");
    Point p{0.0, 0.0};
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ParameterError(path, "must be an array of numbers");
        p[i] = v[i].get<double>();
    }
    return p;
}

bool needs_grid(ExperimentKind k) { return k != ExperimentKind::classify; }

}  // namespace

std::string to_string(ExperimentKind k) {
    for (const auto& [kind, name] : kind_names())
        if (kind == k) return name;
    return "";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    for (const auto& [kind, n] : kind_names())
        if (n == name) return kind;
    throw ParameterError("kind", "unknown experiment kind '" + name + "'");
}

std::vector<std::string> tolerance_names() {
    return {"cg_tol",          "eig_tol",      "plateau_slope",      "tail_fraction",
            "debris_fraction", "volume_floor", "resolvent_fraction", "cauchy_fraction"};
}

ExperimentConfig parse_config(const Json& doc) {
    reject_unknown(doc, "", {"kind", "grid", "s", "functional", "seeds", "output_dir", "tolerances", "mask", "k",
                             "two_ball", "minimize", "classify", "lieb", "audit"});
    ExperimentConfig cfg;
    cfg.source = doc;
    if (!doc.contains("kind")) throw ParameterError("kind", "missing");
    cfg.kind = experiment_kind_from_string(get_as<std::string>(doc, "kind", "kind"));
    if (doc.contains("grid")) cfg.grid = grid_from_json(doc.at("grid"));
    if (doc.contains("s")) cfg.s = get_as<double>(doc, "s", "s");
    if (doc.contains("functional")) cfg.functional = get_as<std::string>(doc, "functional", "functional");
    if (doc.contains("seeds")) {
        const Json& v = doc.at("seeds");
        if (!v.is_array()) throw ParameterError("seeds", "must be an array of nonnegative integers");
        cfg.seeds.clear();
        for (const auto& x : v) {
            if (!x.is_number_integer() || x.get<long long>() < 0)
                throw ParameterError("seeds", "must be an array of nonnegative integers");
            cfg.seeds.push_back(x.get<std::uint64_t>());
        }
    }
    if (doc.contains("output_dir")) cfg.output_dir = get_as<std::string>(doc, "output_dir", "output_dir");
    if (doc.contains("tolerances")) {
        const Json& t = doc.at("tolerances");
        if (!t.is_object()) throw ParameterError("tolerances", "must be an object");
        const auto names = tolerance_names();
        for (const auto& [key, value] : t.items()) {
            if (std::find(names.begin(), names.end(), key) == names.end())
                throw ParameterError("tolerances." + key, "unknown tolerance");
            if (!value.is_number()) throw ParameterError("tolerances." + key, "must be a number");
            cfg.tolerances[key] = value.get<double>();
        }
    }
    if (doc.contains("mask")) {
        const Json& m = doc.at("mask");
        reject_unknown(m, "mask", {"cells", "center", "volume"});
        MaskSpec spec;
        if (m.contains("cells")) spec.cells = get_as<std::string>(m, "cells", "mask.cells");
        if (m.contains("center")) spec.center = get_point(m.at("center"), "mask.center");
        if (m.contains("volume")) spec.volume = get_as<double>(m, "volume", "mask.volume");
        cfg.mask = spec;
    }
    if (doc.contains("k")) cfg.k = get_as<int>(doc, "k", "k");
    if (doc.contains("two_ball")) {
        const Json& b = doc.at("two_ball");
        reject_unknown(b, "two_ball", {"total_volume", "distances"});
        read_opt(b, "total_volume", "two_ball", cfg.two_ball.total_volume);
        if (b.contains("distances")) cfg.two_ball.distances = get_reals(b, "distances", "two_ball.distances");
    }
    if (doc.contains("minimize")) {
        const Json& b = doc.at("minimize");
        reject_unknown(b, "minimize",
                       {"volume", "iterations", "initial_temperature", "cooling", "adjacent_fraction", "checkpoints"});
        auto& m = cfg.minimize;
        read_opt(b, "volume", "minimize", m.volume);
        read_opt(b, "iterations", "minimize", m.iterations);
        read_opt(b, "initial_temperature", "minimize", m.initial_temperature);
        read_opt(b, "cooling", "minimize", m.cooling);
        read_opt(b, "adjacent_fraction", "minimize", m.adjacent_fraction);
        read_opt(b, "checkpoints", "minimize", m.checkpoints);
    }
    if (doc.contains("classify")) {
        const Json& b = doc.at("classify");
        reject_unknown(b, "classify", {"family", "dim", "length", "h", "growth", "bump_mass", "epsilon_fraction"});
        auto& c = cfg.classify;
        read_opt(b, "family", "classify", c.family);
        read_opt(b, "dim", "classify", c.dim);
        read_opt(b, "length", "classify", c.length);
        read_opt(b, "h", "classify", c.h);
        read_opt(b, "growth", "classify", c.growth);
        read_opt(b, "bump_mass", "classify", c.bump_mass);
        read_opt(b, "epsilon_fraction", "classify", c.epsilon_fraction);
    }
    if (doc.contains("lieb")) {
        const Json& b = doc.at("lieb");
        reject_unknown(b, "lieb", {"trials", "min_cells"});
        read_opt(b, "trials", "lieb", cfg.lieb.trials);
        read_opt(b, "min_cells", "lieb", cfg.lieb.min_cells);
    }
    if (doc.contains("audit")) {
        const Json& b = doc.at("audit");
        reject_unknown(b, "audit", {"trials"});
        read_opt(b, "trials", "audit", cfg.audit.trials);
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParameterError("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

void validate_config(const ExperimentConfig& cfg) {
    if (!(cfg.s > 0.0 && cfg.s < 1.0)) throw ParameterError("s", "must lie in (0, 1)");
    if (cfg.seeds.empty()) throw ParameterError("seeds", "must be nonempty");
    for (const auto& [name, value] : cfg.tolerances)
        if (!(value > 0.0)) throw ParameterError("tolerances." + name, "must be positive");
    if (needs_grid(cfg.kind)) {
        if (!cfg.grid) throw ParameterError("grid", "required for kind " + to_string(cfg.kind));
        if (cfg.kind != ExperimentKind::grid && cfg.grid->cell_count() > kMaxAssemblyCells)
            throw ParameterError("grid.resolution", fmt::format("more than {} cells cannot be assembled", kMaxAssemblyCells));
    }
    const Grid* g = cfg.grid ? &*cfg.grid : nullptr;
    if (cfg.mask) {
        if (!g) throw ParameterError("mask", "requires a grid");
        const MaskSpec& m = *cfg.mask;
        if (m.cells && (m.center || m.volume)) throw ParameterError("mask", "give either cells or center and volume");
        if (m.cells) {
            (void)decode_rle(*m.cells, static_cast<std::size_t>(g->cell_count()));
        } else {
            if (!m.volume) throw ParameterError("mask.volume", "missing");
            const double cap = g->cell_count() * g->cell_volume();
            if (!(*m.volume > 0.0 && *m.volume <= cap * (1.0 + 1e-12)))
                throw ParameterError("mask.volume", fmt::format("must lie in (0, {}]", cap));
        }
    }
    switch (cfg.kind) {
        case ExperimentKind::grid:
        case ExperimentKind::torsion: break;
        case ExperimentKind::eig:
            if (cfg.k < 1) throw ParameterError("k", "must be at least 1");
            break;
        case ExperimentKind::two_ball: {
            if (!(cfg.two_ball.total_volume > 0.0)) throw ParameterError("two_ball.total_volume", "must be positive");
            if (cfg.two_ball.distances.empty()) throw ParameterError("two_ball.distances", "must be nonempty");
            const double half = 0.5 * cfg.two_ball.total_volume;
            const double radius = g->dim() == 1 ? 0.5 * half : std::sqrt(half / M_PI);
            const double max_d = 2.0 * (g->half_width() - g->h() - 2.0 * radius);
            for (double d : cfg.two_ball.distances) {
                if (!(d > 0.0))
                    throw ParameterError("two_ball.distances", fmt::format("minimum feasible d is {}", g->h()));
                if (d > max_d)
                    throw ParameterError("two_ball.distances", fmt::format("maximum feasible d is {}", max_d));
            }
            break;
        }
        case ExperimentKind::minimize: {
            if (!cfg.functional) throw ParameterError("functional", "required for kind minimize");
            const FunctionalSpec spec = parse_functional(*cfg.functional);
            const auto& m = cfg.minimize;
            const double cells = m.volume / g->cell_volume();
            if (!(std::abs(cells - std::round(cells)) <= 1e-9 * std::max(1.0, cells)) || std::round(cells) < 2 ||
                std::round(cells) >= g->cell_count())
                throw ParameterError("minimize.volume", "must be an integer number of cells in [2, M)");
            if (std::round(cells) < spec.k) throw ParameterError("minimize.volume", "fewer cells than eigenvalues");
            if (m.iterations < 0) throw ParameterError("minimize.iterations", "must be nonnegative");
            if (!(m.cooling > 0.0 && m.cooling <= 1.0)) throw ParameterError("minimize.cooling", "must lie in (0, 1]");
            if (!(m.adjacent_fraction >= 0.0 && m.adjacent_fraction <= 1.0))
                throw ParameterError("minimize.adjacent_fraction", "must lie in [0, 1]");
            if (m.checkpoints < 1) throw ParameterError("minimize.checkpoints", "must be at least 1");
            break;
        }
        case ExperimentKind::classify: {
            const auto& c = cfg.classify;
            (void)sequence_family_from_string(c.family);
            if (c.dim != 1 && c.dim != 2) throw ParameterError("classify.dim", "must be 1 or 2");
            if (c.length < 8) throw ParameterError("classify.length", "must be at least 8");
            if (!(c.h > 0.0)) throw ParameterError("classify.h", "must be positive");
            if (!(c.growth > 1.0)) throw ParameterError("classify.growth", "must exceed 1");
            if (!(c.bump_mass > 0.0)) throw ParameterError("classify.bump_mass", "must be positive");
            if (!(c.epsilon_fraction > 0.0 && c.epsilon_fraction < 0.25))
                throw ParameterError("classify.epsilon_fraction", "must lie in (0, 0.25)");
            break;
        }
        case ExperimentKind::lieb:
            if (cfg.lieb.trials < 1) throw ParameterError("lieb.trials", "must be at least 1");
            if (cfg.lieb.min_cells < 1 || cfg.lieb.min_cells > g->cell_count())
                throw ParameterError("lieb.min_cells", "must lie in [1, M]");
            break;
        case ExperimentKind::bounds_audit:
            if (cfg.audit.trials < 1) throw ParameterError("audit.trials", "must be at least 1");
            break;
    }
}

SolverOptions solver_options(const ExperimentConfig& cfg) {
    SolverOptions o;
    if (auto it = cfg.tolerances.find("cg_tol"); it != cfg.tolerances.end()) o.cg_tol = it->second;
    if (auto it = cfg.tolerances.find("eig_tol"); it != cfg.tolerances.end()) o.eig_tol = it->second;
    return o;
}

namespace {

double tolerance_or(const ExperimentConfig& cfg, const std::string& name, double fallback) {
    const auto it = cfg.tolerances.find(name);
    return it == cfg.tolerances.end() ? fallback : it->second;
}

class Writer {
public:
    explicit Writer(ReportBundle& bundle) : bundle_(bundle) {}

    void write(const std::string& name, const std::string& content) {
        write_text_file(bundle_.output_dir / name, content);
        bundle_.files.push_back(OutputFile{name, sha256_hex(content), content.size()});
    }
    void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

private:
    ReportBundle& bundle_;
};

DomainMask config_mask(const ExperimentConfig& cfg, const Grid& g) {
    if (!cfg.mask) return DomainMask::full(g);
    if (cfg.mask->cells) return DomainMask(g, decode_rle(*cfg.mask->cells, static_cast<std::size_t>(g.cell_count())));
    return ball_mask(g, cfg.mask->center.value_or(Point{0.0, 0.0}), *cfg.mask->volume);
}

Json run_grid(const ExperimentConfig& cfg, Writer& w) {
    const Grid& g = *cfg.grid;
    Json centers = Json::array();
    for (const Point& p : g.cell_centers())
        centers.push_back(g.dim() == 1 ? Json(p[0]) : Json::array({p[0], p[1]}));
    Json out{{"grid", grid_to_json(g)},
             {"h", g.h()},
             {"cell_count", g.cell_count()},
             {"s", cfg.s},
             {"c_norm", normalization_constant(cfg.s, g.dim())},
             {"cell_centers", centers}};
    if (cfg.mask) out["mask"] = mask_to_json(config_mask(cfg, g));
    w.write_json("grid.json", out);
    return Json{{"cell_count", g.cell_count()}};
}

Json run_eig(const ExperimentConfig& cfg, Writer& w) {
    const Grid& g = *cfg.grid;
    const StiffnessOperator op = assemble_stiffness(g, cfg.s);
    const DomainMask mask = config_mask(cfg, g);
    if (cfg.k > mask.count()) throw ParameterError("k", fmt::format("exceeds the {} mask cells", mask.count()));
    const Spectrum sp = eigenpairs(restrict_to(op, mask), cfg.k, solver_options(cfg));
    Json out{{"grid", grid_to_json(g)}, {"s", cfg.s}, {"mask", mask_to_json(mask)}};
    out.update(spectrum_to_json(sp));
    w.write_json("spectrum.json", out);
    for (std::size_t j = 0; j < sp.eigenfunctions.size(); ++j)
        w.write(fmt::format("eigenfunction_{}.csv", j + 1), function_csv(sp.eigenfunctions[j]));
    return spectrum_to_json(sp);
}

Json run_torsion(const ExperimentConfig& cfg, Writer& w) {
    const Grid& g = *cfg.grid;
    const StiffnessOperator op = assemble_stiffness(g, cfg.s);
    const TorsionFunction t = solve_torsion(restrict_to(op, config_mask(cfg, g)), solver_options(cfg));
    Json out = torsion_to_json(t);
    out["s"] = cfg.s;
    w.write_json("torsion.json", out);
    w.write("torsion.csv", function_csv(t.values));
    return Json{{"integral", t.values.integral()}};
}

Json run_two_ball(const ExperimentConfig& cfg, Writer& w) {
    const StiffnessOperator op = assemble_stiffness(*cfg.grid, cfg.s);
    const auto rows = two_ball_experiment(op, cfg.two_ball.total_volume, cfg.two_ball.distances, solver_options(cfg));
    w.write("two_ball.csv", two_ball_csv(rows));
    bool positive = true, decreasing = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        positive = positive && rows[i].gap > 0.0;
        if (i > 0) decreasing = decreasing && rows[i].gap < rows[i - 1].gap;
    }
    return Json{{"rows", rows.size()}, {"gap_positive", positive}, {"gap_strictly_decreasing", decreasing}};
}

Json run_minimize(const ExperimentConfig& cfg, Writer& w) {
    const StiffnessOperator op = assemble_stiffness(*cfg.grid, cfg.s);
    const FunctionalSpec spec = parse_functional(*cfg.functional);
    const SolverOptions so = solver_options(cfg);
    DichotomyOptions dopt;
    dopt.debris_fraction = tolerance_or(cfg, "debris_fraction", dopt.debris_fraction);
    dopt.volume_floor = tolerance_or(cfg, "volume_floor", dopt.volume_floor);
    dopt.resolvent_fraction = tolerance_or(cfg, "resolvent_fraction", dopt.resolvent_fraction);
    dopt.cauchy_fraction = tolerance_or(cfg, "cauchy_fraction", dopt.cauchy_fraction);
    Json runs = Json::array();
    for (std::uint64_t seed : cfg.seeds) {
        AnnealOptions ao;
        ao.iterations = cfg.minimize.iterations;
        ao.seed = seed;
        ao.initial_temperature = cfg.minimize.initial_temperature;
        ao.cooling = cfg.minimize.cooling;
        ao.adjacent_fraction = cfg.minimize.adjacent_fraction;
        ao.checkpoints = cfg.minimize.checkpoints;
        const ShapeTrajectory traj = minimize_shape(spec, op, cfg.minimize.volume, ao, so);
        const std::string name = fmt::format("trajectory_seed{}.jsonl", seed);
        w.write(name, trajectory_jsonl(traj));
        Json vols = Json::array();
        for (const auto& c : connected_components(traj.masks.back())) vols.push_back(c.volume());
        const DichotomyReport rep = detect_dichotomy(traj, op, dopt, so);
        runs.push_back(Json{{"seed", seed},
                            {"trajectory", name},
                            {"final_value", real_to_json(traj.values.back())},
                            {"accepted_moves", traj.move_log.size()},
                            {"final_mask", mask_to_json(traj.masks.back())},
                            {"component_volumes", vols},
                            {"detector", dichotomy_to_json(rep)}});
    }
    const Json out{{"functional", spec.name}, {"volume", cfg.minimize.volume}, {"runs", runs}};
    w.write_json("minimize.json", out);
    return Json{{"runs", runs.size()}};
}

Json run_classify(const ExperimentConfig& cfg, Writer& w) {
    const auto& c = cfg.classify;
    ClassifyThresholds th;
    th.plateau_slope = tolerance_or(cfg, "plateau_slope", th.plateau_slope);
    th.tail_fraction = tolerance_or(cfg, "tail_fraction", th.tail_fraction);
    Json verdicts = Json::array();
    for (std::uint64_t seed : cfg.seeds) {
        GeneratorOptions go;
        go.dim = c.dim;
        go.length = c.length;
        go.h = c.h;
        go.growth = c.growth;
        go.bump_mass = c.bump_mass;
        go.seed = seed;
        const FunctionSequence seq = generate_sequence(sequence_family_from_string(c.family), go);
        const TrichotomyReport rep = classify(seq, c.epsilon_fraction * seq.mass_limit, th);
        Json j = trichotomy_to_json(rep);
        j["family"] = c.family;
        j["seed"] = seed;
        w.write_json(fmt::format("classify_seed{}.json", seed), j);
        verdicts.push_back(Json{{"seed", seed}, {"verdict", to_string(rep.verdict)},
                                {"alpha", rep.alpha ? Json(*rep.alpha) : Json(nullptr)}});
    }
    w.write_json("classify.json", Json{{"family", c.family}, {"verdicts", verdicts}});
    return Json{{"verdicts", verdicts}};
}

DomainMask random_lieb_mask(const Grid& g, std::mt19937_64& rng, int min_cells) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double density = 0.05 + 0.5 * unit(rng);
    DomainMask m(g);
    while (m.count() < min_cells)
        for (int i = 0; i < g.cell_count(); ++i)
            if (unit(rng) < density) m.set(i);
    return m;
}

Json run_lieb(const ExperimentConfig& cfg, Writer& w, bool& passed) {
    const StiffnessOperator op = assemble_stiffness(*cfg.grid, cfg.s);
    Json trials = Json::array();
    int satisfied = 0, total = 0, no_overlap = 0;
    for (std::uint64_t seed : cfg.seeds) {
        std::mt19937_64 rng(seed);
        for (int t = 0; t < cfg.lieb.trials; ++t) {
            const DomainMask a = random_lieb_mask(*cfg.grid, rng, cfg.lieb.min_cells);
            const DomainMask b = random_lieb_mask(*cfg.grid, rng, cfg.lieb.min_cells);
            Json j;
            try {
                const LiebResult r = lieb_translation_search(op, a, b);
                satisfied += r.satisfied ? 1 : 0;
                ++total;
                j = lieb_to_json(r);
            } catch (const NoOverlapError&) {
                // No admissible shift inside the box meets B; the trial has nothing to test.
                ++no_overlap;
                j = Json{{"no_overlap", true}};
            }
            j["seed"] = seed;
            j["trial"] = t;
            j["a"] = encode_rle(a.cells());
            j["b"] = encode_rle(b.cells());
            trials.push_back(j);
        }
    }
    passed = satisfied == total;
    w.write_json("lieb.json",
                 Json{{"satisfied", satisfied}, {"total", total}, {"no_overlap", no_overlap}, {"trials", trials}});
    return Json{{"satisfied", satisfied}, {"total", total}, {"no_overlap", no_overlap}};
}

Json run_audit(const ExperimentConfig& cfg, Writer& w, bool& passed) {
    const StiffnessOperator op = assemble_stiffness(*cfg.grid, cfg.s);
    const AuditReport rep = audit_operator(op, cfg.seeds, cfg.audit.trials, solver_options(cfg));
    Json checks = Json::array();
    for (const auto& c : rep.checks)
        checks.push_back(Json{{"name", c.name},
                              {"passed", c.passed},
                              {"slack", real_to_json(c.slack)},
                              {"instances", c.instances},
                              {"detail", c.detail}});
    passed = rep.passed();
    w.write_json("audit.json", Json{{"passed", passed}, {"checks", checks}});
    return Json{{"passed", passed}};
}

Json versions() {
    return Json{{"fracshape", FRACSHAPE_VERSION},
                {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                {"boost", BOOST_LIB_VERSION},
                {"fftw", std::string(fftw_version)},
                {"fmt", FMT_VERSION},
                {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                              NLOHMANN_JSON_VERSION_PATCH)}};
}

}  // namespace

ReportBundle run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto start = std::chrono::steady_clock::now();
    ReportBundle bundle;
    bundle.output_dir = cfg.output_dir;
    std::filesystem::create_directories(bundle.output_dir);
    Writer w(bundle);
    bool passed = true;
    switch (cfg.kind) {
        case ExperimentKind::grid: bundle.summary = run_grid(cfg, w); break;
        case ExperimentKind::eig: bundle.summary = run_eig(cfg, w); break;
        case ExperimentKind::torsion: bundle.summary = run_torsion(cfg, w); break;
        case ExperimentKind::two_ball: bundle.summary = run_two_ball(cfg, w); break;
        case ExperimentKind::minimize: bundle.summary = run_minimize(cfg, w); break;
        case ExperimentKind::classify: bundle.summary = run_classify(cfg, w); break;
        case ExperimentKind::lieb: bundle.summary = run_lieb(cfg, w, passed); break;
        case ExperimentKind::bounds_audit: bundle.summary = run_audit(cfg, w, passed); break;
    }
    bundle.passed = passed;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    Json files = Json::array();
    for (const auto& f : bundle.files) files.push_back(Json{{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    Json seeds = Json::array();
    for (auto s : cfg.seeds) seeds.push_back(s);
    const Json manifest{{"kind", to_string(cfg.kind)},
                        {"config", cfg.source},
                        {"versions", versions()},
                        {"seeds", seeds},
                        {"wall_time_seconds", wall},
                        {"passed", passed},
                        {"files", files}};
    write_text_file(bundle.output_dir / "manifest.json", manifest.dump(2) + "\n");
    return bundle;
}

}  // namespace fracshape
