// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "avprune/cli.hpp"
#include "avprune/tensor_io.hpp"
#include "doctest.h"
#include "nlohmann/json.hpp"

using namespace avprune;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) {
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    return kv;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("avprune_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path small_config(const fs::path& dir, const std::string& selector = "tds", double p_final = 0.3) {
    const nlohmann::json j = {
        {"sequence", {{"sys_len", 2}, {"m", 2}, {"n_v", 16}, {"n_a", 10}, {"query_len", 4}, {"d", 16}, {"seed", 3}}},
        {"model", {{"L", 6}, {"H", 2}, {"d", 16}, {"seed", 4}}},
        {"schedule", {{"p_final", p_final}}},
        {"intra", {{"frames_per_chunk", 4}, {"tokens_per_frame", 4}}},
        {"selector", selector},
    };
    const fs::path path = dir / "config.json";
    std::ofstream(path) << j.dump(2);
    return path;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

TEST_CASE("calibrate reports closed form and bisection") {
    const auto r = invoke({"calibrate", "--target", "0.30", "--r0", "0.45", "--layers", "28"});
    REQUIRE(r.code == 0);
    auto kv = key_values(r.out);
    CHECK(std::stod(kv["closed_form_p_final"]) == doctest::Approx(0.1452).epsilon(0.0005 / 0.1452));
    CHECK(std::stod(kv["achieved_mean"]) == doctest::Approx(0.30).epsilon(1e-4 / 0.3));
    CHECK(std::stod(kv["bisection_p_final"]) > 0.0);

    const auto near = invoke({"calibrate", "--target", "0.44", "--r0", "0.45"});
    CHECK(near.code == 0);
    CHECK(invoke({"calibrate", "--target", "0.45", "--r0", "0.45"}).code == cli::kConfig);
    CHECK(invoke({"calibrate", "--target", "0.01", "--r0", "0.45"}).code == cli::kInfeasible);
    CHECK(invoke({"calibrate"}).code == cli::kConfig);
    CHECK(invoke({"frobnicate"}).code == cli::kConfig);
}

TEST_CASE("schedule table") {
    const auto r = invoke({"schedule", "--layers", "28"});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    std::vector<std::string> rows;
    for (const auto& line : lines) {
        if (!line.empty() && line[0] != '#' && line.rfind("l,", 0) != 0) {
            rows.push_back(line);
        }
    }
    CHECK(rows.size() == 28);
    CHECK(rows.back().rfind("27,0", 0) == 0);
    CHECK(lines.back().rfind("# mean_retention=", 0) == 0);

    const auto e = invoke({"schedule", "--kind", "exponential", "--p-init", "0.02", "--p-final", "0.5"});
    REQUIRE(e.code == 0);
    const auto elines = lines_of(e.out);
    bool saw_first = false;
    bool saw_last = false;
    for (const auto& line : elines) {
        if (line.rfind("0,", 0) == 0) {
            saw_first = std::stod(line.substr(2)) == doctest::Approx(0.02);
        }
        if (line.rfind("26,", 0) == 0) {
            saw_last = std::stod(line.substr(3)) == doctest::Approx(0.5);
        }
    }
    CHECK(saw_first);
    CHECK(saw_last);
    CHECK(invoke({"schedule", "--p-final", "1.5"}).code == cli::kConfig);
}

TEST_CASE("simulate is deterministic and replayable") {
    const auto dir = scratch("simulate");
    const auto config = small_config(dir);
    const auto a = invoke({"simulate", "--config", config.string(), "--out", (dir / "a").string(), "--dump-attention"});
    REQUIRE(a.code == 0);
    const auto b = invoke({"simulate", "--config", config.string(), "--out", (dir / "b").string()});
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("digest=", 0) == 0);
    for (const char* f : {"trace.jsonl", "retention.csv", "layout.jsonl", "embeddings.omtn", "config.json"}) {
        CHECK(fs::exists(dir / "a" / f));
    }
    CHECK(fs::exists(dir / "a" / "attention" / "manifest.json"));

    const auto c = invoke({"simulate", "--config", config.string(), "--out", (dir / "c").string(), "--inject",
                           (dir / "a" / "attention").string()});
    REQUIRE(c.code == 0);
    CHECK(c.out == a.out);

    CHECK(invoke({"simulate", "--config", config.string(), "--out", (dir / "d").string(), "--inject",
                  (dir / "nowhere").string()})
              .code == cli::kIo);

    const auto multi = invoke({"simulate", "--config", config.string(), "--out", (dir / "m").string(), "--runs", "3",
                               "--workers", "2"});
    REQUIRE(multi.code == 0);
    CHECK(lines_of(multi.out).size() == 3);
    CHECK(fs::exists(dir / "m" / "run_002" / "trace.jsonl"));
    const auto serial = invoke({"simulate", "--config", config.string(), "--out", (dir / "s").string(), "--runs", "3",
                                "--workers", "1"});
    CHECK(serial.out == multi.out);
}

TEST_CASE("analyze metrics") {
    const auto dir = scratch("analyze");
    const auto config = small_config(dir);
    const auto sim = dir / "sim";
    REQUIRE(invoke({"simulate", "--config", config.string(), "--out", sim.string(), "--dump-attention"}).code == 0);

    const auto ret = invoke({"analyze", "--metric", "retention", "--trace", (sim / "trace.jsonl").string()});
    REQUIRE(ret.code == 0);
    const auto ret_lines = lines_of(ret.out);
    CHECK(ret_lines.size() >= 7);
    CHECK(ret_lines[1].rfind("layer,", 0) == 0);
    CHECK(ret_lines[2].substr(ret_lines[2].size() - 4) == ",1,1");

    const auto recall = invoke({"analyze", "--metric", "recall", "--attention",
                                attention_tensor_path(sim / "attention", 0).string(), "--layout",
                                (sim / "layout.jsonl").string()});
    REQUIRE(recall.code == 0);
    const auto j = nlohmann::json::parse(recall.out);
    CHECK(j.contains("recall"));
    CHECK(j["recall"].get<double>() >= 0.0);
    CHECK(j["recall"].get<double>() <= 1.0);

    const auto cos = invoke({"analyze", "--metric", "cosine", "--embeddings", (sim / "embeddings.omtn").string(),
                             "--layout", (sim / "layout.jsonl").string(), "--pair", "AV"});
    REQUIRE(cos.code == 0);
    CHECK(lines_of(cos.out).size() >= 41);

    const auto pca = invoke({"analyze", "--metric", "pca", "--embeddings", (sim / "embeddings.omtn").string(),
                             "--layout", (sim / "layout.jsonl").string()});
    CHECK(pca.code == 0);

    CHECK(invoke({"analyze", "--metric", "retention", "--trace", (dir / "missing.jsonl").string()}).code ==
          cli::kSchema);
    CHECK(invoke({"analyze", "--metric", "recall"}).code == cli::kSchema);
}

TEST_CASE("cost reports unit ratios without pruning") {
    const auto dir = scratch("cost");
    const auto config = small_config(dir, "plain", 0.0);
    const auto sim = dir / "sim";
    REQUIRE(invoke({"simulate", "--config", config.string(), "--out", sim.string()}).code == 0);
    const auto r = invoke({"cost", "--trace", (sim / "trace.jsonl").string(), "--d", "16"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    // Intra pruning still shrinks the sequence relative to the original token count.
    CHECK(j["flops_ratio"].get<double>() < 1.0);

    const auto config2 = small_config(dir, "plain", 0.0);
    nlohmann::json raw = nlohmann::json::parse(std::ifstream(config2));
    raw["intra"]["enabled"] = false;
    std::ofstream(config2) << raw.dump();
    const auto sim2 = dir / "sim2";
    REQUIRE(invoke({"simulate", "--config", config2.string(), "--out", sim2.string()}).code == 0);
    const auto r2 = invoke({"cost", "--trace", (sim2 / "trace.jsonl").string(), "--d", "16", "--bytes", "4"});
    REQUIRE(r2.code == 0);
    const auto j2 = nlohmann::json::parse(r2.out);
    CHECK(j2["flops_ratio"].get<double>() == doctest::Approx(1.0));
    CHECK(j2["memory_ratio"].get<double>() == doctest::Approx(1.0));

    CHECK(invoke({"cost", "--trace", (dir / "none.jsonl").string(), "--d", "16"}).code == cli::kSchema);
    CHECK(invoke({"cost", "--trace", (sim / "trace.jsonl").string(), "--d", "16", "--bytes", "3"}).code == cli::kConfig);
}
