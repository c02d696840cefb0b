#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "dwlab/io.hpp"
#include "dwlab/labcli.hpp"

using namespace dwlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("dwlab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

json gen_config() {
    return json::parse(R"({"seed": 5, "dataset": {"benchmark": "imbalanced", "large": 100, "small": 10}})");
}

json train_config(std::size_t epochs) {
    json c = json::parse(R"({"seed": 3, "dataset": {"benchmark": "separable", "n": 20},
        "family": {"kind": "linear", "loss": {"kind": "exponential"}, "hyper": {"learning_rate": 0.1}},
        "max_margin_reference": true})");
    c["family"]["hyper"]["epochs"] = epochs;
    return c;
}

}  // namespace

TEST_CASE("gen on the 10:1 spec writes a dataset and a manifest with hashes") {
    const auto dir = fresh_dir("gen");
    lab::RunOptions opts;
    opts.out_dir = dir;
    const auto m = lab::run(lab::Kind::gen, gen_config(), opts);
    REQUIRE(m.artifacts.size() == 1);
    CHECK(m.artifacts[0].path == "dataset.csv");
    const auto text = io::read_file(dir / "dataset.csv");
    CHECK(sha256_hex(text) == m.artifacts[0].sha256);
    std::istringstream in(text);
    const auto ds = load_dataset_csv(in);
    CHECK(ds.n == 110);
    const auto manifest = json::parse(io::read_file(dir / "manifest.json"));
    CHECK(manifest.at("schema_version") == lab::schema_version);
    CHECK(manifest.at("config_digest") == config_digest(gen_config()));
    fs::remove_all(dir);
}

TEST_CASE("rerunning a config reproduces every artifact hash") {
    lab::RunOptions a, b;
    a.out_dir = fresh_dir("det_a");
    b.out_dir = fresh_dir("det_b");
    b.jobs = 3;
    const auto cfg = train_config(200);
    const auto ma = lab::run(lab::Kind::train, cfg, a);
    const auto mb = lab::run(lab::Kind::train, cfg, b);
    REQUIRE(ma.artifacts.size() == mb.artifacts.size());
    for (std::size_t k = 0; k < ma.artifacts.size(); ++k) {
        CHECK(ma.artifacts[k].path == mb.artifacts[k].path);
        CHECK(ma.artifacts[k].sha256 == mb.artifacts[k].sha256);
    }
    fs::remove_all(a.out_dir);
    fs::remove_all(b.out_dir);
}

TEST_CASE("config digest ignores key order") {
    const auto x = json::parse(R"({"seed": 1, "dataset": {"benchmark": "standard", "per_class": 10}})");
    const auto y = json::parse(R"({"dataset": {"per_class": 10, "benchmark": "standard"}, "seed": 1})");
    CHECK(config_digest(x) == config_digest(y));
}

TEST_CASE("invalid configs raise usage errors before anything is written") {
    const auto dir = fresh_dir("bad");
    lab::RunOptions opts;
    opts.out_dir = dir;
    auto missing = json::parse(R"({"seed": 1, "dataset": {"path": "does_not_exist.csv"}})");
    CHECK_THROWS_AS(lab::run(lab::Kind::gen, missing, opts), lab::UsageError);
    auto no_seed = json::parse(R"({"dataset": {"benchmark": "standard"}})");
    CHECK_THROWS_AS(lab::run(lab::Kind::gen, no_seed, opts), lab::UsageError);
    auto wrong_kind = gen_config();
    wrong_kind["experiment"] = "train";
    CHECK_THROWS_AS(lab::run(lab::Kind::gen, wrong_kind, opts), lab::UsageError);
    auto no_checks = gen_config();
    no_checks["checks"] = json::object();
    CHECK_THROWS_AS(lab::run(lab::Kind::check, no_checks, opts), lab::UsageError);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("report: empty input list yields a no-inputs marker") {
    const auto bundle = lab::build_report({});
    REQUIRE(bundle.files.size() == 1);
    const auto s = json::parse(bundle.files[0].second);
    CHECK(s.at("no_inputs") == true);
}

TEST_CASE("report: one trace gives one curve with epochs + 1 rows") {
    const auto run_dir = fresh_dir("report_run");
    lab::RunOptions opts;
    opts.out_dir = run_dir;
    lab::run(lab::Kind::train, train_config(50), opts);
    const auto bundle = lab::build_report({run_dir});
    std::size_t curves = 0;
    for (const auto& [name, content] : bundle.files) {
        if (name.rfind("curve_", 0) != 0) continue;
        ++curves;
        std::istringstream in(content);
        std::string line;
        std::size_t rows = 0;
        std::getline(in, line);
        CHECK(line == "epoch,normalized_margin,cosine_ref");
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 51);
    }
    CHECK(curves == 1);
    fs::remove_all(run_dir);
}

TEST_CASE("report refuses mixed schema versions and names the offender") {
    const auto a = fresh_dir("schema_a");
    const auto b = fresh_dir("schema_b");
    lab::RunOptions opts;
    opts.out_dir = a;
    lab::run(lab::Kind::gen, gen_config(), opts);
    opts.out_dir = b;
    lab::run(lab::Kind::gen, gen_config(), opts);
    auto m = json::parse(io::read_file(b / "manifest.json"));
    m["schema_version"] = 99;
    io::write_file_atomic(b / "manifest.json", m.dump());
    try {
        lab::build_report({a, b});
        FAIL("expected a report error");
    } catch (const lab::ReportError& e) {
        CHECK(std::string(e.what()).find(b.string()) != std::string::npos);
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("report detects artifacts modified after the run") {
    const auto dir = fresh_dir("tamper");
    lab::RunOptions opts;
    opts.out_dir = dir;
    lab::run(lab::Kind::gen, gen_config(), opts);
    io::write_file_atomic(dir / "dataset.csv", "tampered\n");
    CHECK_THROWS_AS(lab::build_report({dir}), lab::ReportError);
    fs::remove_all(dir);
}
