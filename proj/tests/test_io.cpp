#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "fracshape/errors.hpp"
#include "fracshape/experiments.hpp"
#include "fracshape/io.hpp"

using namespace fracshape;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "fracshape_test_io" / name;
    fs::remove_all(p);
    return p;
}

std::string field_of_config(const std::string& text) {
    try {
        parse_config(Json::parse(text));
    } catch (const ParameterError& e) {
        return e.field();
    }
    return "";
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("real formatting") {
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(format_real(1.0) == "1");
    CHECK(std::stod(format_real(M_PI)) == M_PI);
    CHECK(real_to_json(kInfinity) == Json("+infinity"));
    CHECK(real_to_json(-kInfinity) == Json("-infinity"));
    CHECK(real_from_json(Json("+infinity")) == kInfinity);
    CHECK(real_from_json(Json(2.5)) == 2.5);
    CHECK_THROWS_AS(real_from_json(Json("many")), ParameterError);
}

TEST_CASE("run-length encoding") {
    const std::vector<std::uint8_t> bits{0, 0, 0, 0, 0, 1, 1, 1};
    CHECK(encode_rle(bits) == "0*5,1*3");
    CHECK(decode_rle("0*5,1*3", 8) == bits);
    CHECK(encode_rle({}) == "");
    CHECK_THROWS_AS(decode_rle("0*5,1*3", 9), ParameterError);
    CHECK_THROWS_AS(decode_rle("2*5", 5), ParameterError);
    CHECK_THROWS_AS(decode_rle("0*x", 5), ParameterError);
    CHECK_THROWS_AS(decode_rle("0*99999999999999999999", 5), ParameterError);
    CHECK_THROWS_AS(decode_rle("1*3,0*9", 5), ParameterError);
    std::vector<std::uint8_t> alt;
    for (int i = 0; i < 37; ++i) alt.push_back(static_cast<std::uint8_t>((i * 7) % 3 == 0));
    CHECK(decode_rle(encode_rle(alt), alt.size()) == alt);
}

TEST_CASE("grid and mask JSON round trips") {
    const Grid g = build_grid(2, 1.5, 6);
    CHECK(grid_from_json(grid_to_json(g)) == g);
    CHECK_THROWS_AS(grid_from_json(Json{{"dim", 1}, {"half_width", 1.0}, {"resolution", 4}, {"colour", 1}}),
                    ParameterError);
    try {
        grid_from_json(Json{{"dim", 3}, {"half_width", 1.0}, {"resolution", 4}});
        CHECK(false);
    } catch (const ParameterError& e) {
        CHECK(e.field() == "grid.dim");
    }
    DomainMask m(g);
    for (int i : {0, 7, 8, 9, 35}) m.set(i);
    CHECK(mask_from_json(mask_to_json(m)) == m);
}

TEST_CASE("CSV writers") {
    const Grid g = build_grid(1, 1.0, 3);
    const GridFunction f(g, Eigen::Vector3d(0.5, -1.0, 0.1));
    const auto l = lines(function_csv(f));
    REQUIRE(l.size() == 4);
    CHECK(l[0] == "cell_index,value");
    CHECK(l[1] == "0,0.5");
    CHECK(l[3] == "2,0.10000000000000001");
    CHECK(function_csv(f).find('\r') == std::string::npos);
    const auto t = lines(two_ball_csv({TwoBallRow{1.0, 2.0, 3.0, 2.5, 0.5}}));
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "d,lambda1_union,lambda2_union,lambda1_half_ball,gap");
    CHECK(t[1] == "1,2,3,2.5,0.5");
}

TEST_CASE("SHA-256 known answers") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("text files") {
    const fs::path dir = scratch("text");
    write_text_file(dir / "nested" / "a.txt", "hello\n");
    CHECK(read_text_file(dir / "nested" / "a.txt") == "hello\n");
    CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), ParameterError);
}

TEST_CASE("config parsing names the offending field") {
    CHECK(field_of_config(R"({"s": 0.5})") == "kind");
    CHECK(field_of_config(R"({"kind": "teleport"})") == "kind");
    CHECK(field_of_config(R"({"kind": "grid", "grid": {"dim":1,"half_width":1,"resolution":8}, "s": 1.5})") == "s");
    CHECK(field_of_config(R"({"kind": "grid", "grid": {"dim":1,"half_width":1,"resolution":8}, "s": 0.0})") == "s");
    CHECK(field_of_config(R"({"kind": "grid", "grid": {"dim":1,"half_width":1,"resolution":8}, "colour": 1})") == "colour");
    CHECK(field_of_config(R"({"kind": "grid"})") == "grid");
    CHECK(field_of_config(R"({"kind": "eig", "grid": {"dim":2,"half_width":1,"resolution":80}})") ==
          "grid.resolution");
    CHECK(field_of_config(R"({"kind": "grid", "grid": {"dim":1,"half_width":1,"resolution":8}, "seeds": [-1]})") ==
          "seeds");
    CHECK(field_of_config(
              R"({"kind": "grid", "grid": {"dim":1,"half_width":1,"resolution":8}, "tolerances": {"magic": 1}})") ==
          "tolerances.magic");
    CHECK(field_of_config(R"({"kind": "two-ball", "grid": {"dim":1,"half_width":8,"resolution":32},
                              "two_ball": {"total_volume": 4, "distances": [100]}})") == "two_ball.distances");
    CHECK(field_of_config(R"({"kind": "two-ball", "grid": {"dim":1,"half_width":8,"resolution":32},
                              "two_ball": {"total_volume": 4, "distances": [1], "extra": 2}})") == "two_ball.extra");
    CHECK(field_of_config(R"({"kind": "minimize", "grid": {"dim":1,"half_width":8,"resolution":32},
                              "minimize": {"volume": 4}})") == "functional");
    CHECK(field_of_config(R"({"kind": "minimize", "grid": {"dim":1,"half_width":8,"resolution":32},
                              "functional": "lambda1", "minimize": {"volume": 4, "cooling": 2}})") ==
          "minimize.cooling");
    CHECK(field_of_config(R"({"kind": "classify", "classify": {"family": "wandering"}})") == "family");
    CHECK(field_of_config(R"({"kind": "classify", "classify": {"length": 3}})") == "classify.length");
    CHECK(field_of_config(R"({"kind": "classify"})") == "");
}

TEST_CASE("shipped configs load") {
    const fs::path dir = FRACSHAPE_TEST_CONFIG_DIR;
    for (const char* name : {"two_ball.json", "classify_translating.json", "minimize.json", "audit.json", "lieb.json"})
        CHECK_NOTHROW(load_config(dir / name));
    try {
        load_config(dir / "bad_s.json");
        CHECK(false);
    } catch (const ParameterError& e) {
        CHECK(e.field() == "s");
    }
}

TEST_CASE("experiments write their artifacts and a manifest") {
    const fs::path dir = FRACSHAPE_TEST_CONFIG_DIR;
    ExperimentConfig cfg = load_config(dir / "two_ball.json");
    cfg.output_dir = scratch("two_ball_a");
    const ReportBundle a = run_experiment(cfg);
    REQUIRE(a.files.size() == 1);
    CHECK(a.files[0].path == "two_ball.csv");
    const std::string csv = read_text_file(cfg.output_dir / "two_ball.csv");
    CHECK(a.files[0].sha256 == sha256_hex(csv));
    CHECK(lines(csv).size() == 4);
    const Json manifest = Json::parse(read_text_file(cfg.output_dir / "manifest.json"));
    CHECK(manifest["kind"] == "two-ball");
    CHECK(manifest["files"][0]["sha256"] == a.files[0].sha256);
    CHECK(manifest.contains("versions"));
    CHECK(manifest["config"]["s"] == 0.5);

    cfg.output_dir = scratch("two_ball_b");
    const ReportBundle b = run_experiment(cfg);
    CHECK(b.files[0].sha256 == a.files[0].sha256);
}

TEST_CASE("every experiment kind is reproducible") {
    const std::vector<std::string> docs{
        R"({"kind": "grid", "grid": {"dim": 2, "half_width": 1, "resolution": 4}, "mask": {"center": [0, 0], "volume": 1}})",
        R"({"kind": "eig", "grid": {"dim": 1, "half_width": 1, "resolution": 24}, "k": 2})",
        R"({"kind": "torsion", "grid": {"dim": 1, "half_width": 1, "resolution": 24}, "mask": {"cells": "0*4,1*16,0*4"}})",
        R"({"kind": "minimize", "grid": {"dim": 1, "half_width": 4, "resolution": 32}, "functional": "lambda2",
            "seeds": [1, 2], "minimize": {"volume": 4, "iterations": 200, "checkpoints": 6}})",
        R"({"kind": "classify", "seeds": [2], "classify": {"family": "separating-pair", "bump_mass": 0.4}})",
        R"({"kind": "lieb", "grid": {"dim": 1, "half_width": 4, "resolution": 32}, "seeds": [3], "lieb": {"trials": 3}})",
    };
    int n = 0;
    for (const auto& text : docs) {
        ExperimentConfig cfg = parse_config(Json::parse(text));
        cfg.output_dir = scratch("kind_a" + std::to_string(n));
        const ReportBundle a = run_experiment(cfg);
        cfg.output_dir = scratch("kind_b" + std::to_string(n));
        const ReportBundle b = run_experiment(cfg);
        ++n;
        REQUIRE(a.files.size() == b.files.size());
        CHECK(!a.files.empty());
        for (std::size_t i = 0; i < a.files.size(); ++i) {
            CHECK(a.files[i].path == b.files[i].path);
            CHECK_MESSAGE(a.files[i].sha256 == b.files[i].sha256, a.files[i].path);
        }
    }
}

TEST_CASE("eig rejects k beyond the mask") {
    ExperimentConfig cfg = parse_config(Json::parse(
        R"({"kind": "eig", "grid": {"dim": 1, "half_width": 1, "resolution": 24}, "k": 5, "mask": {"cells": "1*3,0*21"}})"));
    cfg.output_dir = scratch("eig_k");
    try {
        run_experiment(cfg);
        CHECK(false);
    } catch (const ParameterError& e) {
        CHECK(e.field() == "k");
    }
}
