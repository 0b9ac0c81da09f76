#include "fracshape/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "fracshape/errors.hpp"

namespace fracshape {

std::string format_real(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", x);
}

Json real_to_json(double x) {
    if (std::isinf(x)) return x > 0 ? "+infinity" : "-infinity";
    return x;
}

double real_from_json(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "+infinity") return kInfinity;
        if (s == "-infinity") return -kInfinity;
        throw ParameterError("json", "unexpected string '" + s + "' for a real");
    }
    return j.get<double>();
}

std::string encode_rle(const std::vector<std::uint8_t>& bits) {
    std::string out;
    std::size_t i = 0;
    while (i < bits.size()) {
        std::size_t j = i;
        while (j < bits.size() && (bits[j] != 0) == (bits[i] != 0)) ++j;
        if (!out.empty()) out += ',';
        out += fmt::format("{}*{}", bits[i] != 0 ? 1 : 0, j - i);
        i = j;
    }
    return out;
}

std::vector<std::uint8_t> decode_rle(const std::string& text, std::size_t expected_size) {
    std::vector<std::uint8_t> out;
    std::stringstream ss(text);
    std::string run;
    while (std::getline(ss, run, ',')) {
        const auto star = run.find('*');
        if (star == std::string::npos || star == 0 || star + 1 >= run.size())
            throw ParameterError("cells", "malformed run '" + run + "'");
        const std::string bit = run.substr(0, star);
        if (bit != "0" && bit != "1") throw ParameterError("cells", "run value must be 0 or 1");
        unsigned long long n = 0;
        const char* first = run.data() + star + 1;
        const char* last = run.data() + run.size();
        const auto [ptr, ec] = std::from_chars(first, last, n);
        if (ec != std::errc() || ptr != last) throw ParameterError("cells", "malformed run length in '" + run + "'");
        if (n > expected_size - std::min(expected_size, out.size()))
            throw ParameterError("cells", fmt::format("runs exceed the expected {} cells", expected_size));
        out.insert(out.end(), n, bit == "1" ? 1 : 0);
    }
    if (out.size() != expected_size)
        throw ParameterError("cells", fmt::format("decoded {} cells, expected {}", out.size(), expected_size));
    return out;
}

Json grid_to_json(const Grid& g) {
    return Json{{"dim", g.dim()}, {"half_width", g.half_width()}, {"resolution", g.resolution()}};
}

Grid grid_from_json(const Json& j) {
    if (!j.is_object()) throw ParameterError("grid", "must be an object");
    for (const auto& [key, value] : j.items())
        if (key != "dim" && key != "half_width" && key != "resolution")
            throw ParameterError("grid." + key, "unknown key");
    for (const char* key : {"dim", "half_width", "resolution"})
        if (!j.contains(key)) throw ParameterError(std::string("grid.") + key, "missing");
    if (!j["dim"].is_number_integer()) throw ParameterError("grid.dim", "must be an integer");
    if (!j["resolution"].is_number_integer()) throw ParameterError("grid.resolution", "must be an integer");
    if (!j["half_width"].is_number()) throw ParameterError("grid.half_width", "must be a number");
    try {
        return build_grid(j["dim"].get<int>(), j["half_width"].get<double>(), j["resolution"].get<int>());
    } catch (const ParameterError& e) {
        throw ParameterError("grid." + e.field(), e.what());
    }
}

Json mask_to_json(const DomainMask& m) {
    return Json{{"grid", grid_to_json(m.grid())}, {"cells", encode_rle(m.cells())}};
}

DomainMask mask_from_json(const Json& j) {
    const Grid g = grid_from_json(j.at("grid"));
    return DomainMask(g, decode_rle(j.at("cells").get<std::string>(), static_cast<std::size_t>(g.cell_count())));
}

Json spectrum_to_json(const Spectrum& sp) {
    Json ev = Json::array(), res = Json::array();
    for (double x : sp.eigenvalues) ev.push_back(real_to_json(x));
    for (double x : sp.residuals) res.push_back(x);
    return Json{{"eigenvalues", ev}, {"residuals", res}};
}

Json torsion_to_json(const TorsionFunction& t) {
    return Json{{"mask", mask_to_json(t.mask)},
                {"residual", t.residual},
                {"integral", t.values.integral()},
                {"l2_norm", t.values.l2_norm()},
                {"max", t.values.values.size() ? t.values.values.maxCoeff() : 0.0}};
}

Json trichotomy_to_json(const TrichotomyReport& r) {
    Json centers = Json::array();
    for (const auto& c : r.centers) centers.push_back(Json::array({c[0], c[1]}));
    Json profiles = Json::array();
    for (const auto& p : r.profiles) profiles.push_back(p);
    return Json{{"verdict", to_string(r.verdict)},
                {"mass_limit", r.mass_limit},
                {"epsilon", r.epsilon},
                {"alpha", r.alpha ? Json(*r.alpha) : Json(nullptr)},
                {"centers", centers},
                {"radii", r.radii},
                {"profiles", profiles},
                {"reference_index", r.reference_index},
                {"tail_begin", r.tail_begin},
                {"thresholds",
                 {{"plateau_slope", r.thresholds.plateau_slope}, {"tail_fraction", r.thresholds.tail_fraction}}},
                {"notes", r.notes}};
}

Json dichotomy_to_json(const DichotomyReport& r) {
    Json vols = Json::array();
    for (const auto& [a, b] : r.component_volumes) vols.push_back(Json::array({a, b}));
    return Json{{"verdict", to_string(r.verdict)},
                {"tail_begin", r.tail_begin},
                {"separations", r.separations},
                {"component_volumes", vols},
                {"resolvent_gap", r.resolvent_gap},
                {"resolvent_norm", r.resolvent_norm},
                {"notes", r.notes}};
}

Json lieb_to_json(const LiebResult& r) {
    return Json{{"z", Json::array({r.z[0], r.z[1]})},
                {"lambda1_intersection", r.lambda1_intersection},
                {"bound", r.bound},
                {"satisfied", r.satisfied},
                {"shifts_scanned", r.shifts_scanned}};
}

std::string function_csv(const GridFunction& f) {
    std::string out = "cell_index,value\n";
    for (int i = 0; i < f.values.size(); ++i) out += fmt::format("{},{}\n", i, format_real(f.values(i)));
    return out;
}

std::string two_ball_csv(const std::vector<TwoBallRow>& rows) {
    std::string out = "d,lambda1_union,lambda2_union,lambda1_half_ball,gap\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{}\n", format_real(r.d), format_real(r.lambda1_union),
                           format_real(r.lambda2_union), format_real(r.lambda1_half_ball), format_real(r.gap));
    return out;
}

std::string trajectory_jsonl(const ShapeTrajectory& traj) {
    std::string out;
    for (std::size_t k = 0; k < traj.masks.size(); ++k) {
        const Json line{{"index", k},
                        {"value", real_to_json(traj.values[k])},
                        {"volume", traj.masks[k].volume()},
                        {"cells", encode_rle(traj.masks[k].cells())}};
        out += line.dump() + "\n";
    }
    return out;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("path", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

}  // namespace fracshape
