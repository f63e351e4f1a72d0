#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(SEMREID_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("semreid_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("pipeline command writes all artifacts and exits 0") {
  const fs::path dir = fresh_dir("pipeline");
  const int code = run("pipeline --out " + (dir / "run").string() +
                       " --seed 3 --identities 8 --images-per-id 4 --dim 16"
                       " --epochs 40 --cls-epochs 60 --filter \"attr:down black\"");
  CHECK(code == 0);
  CHECK(fs::exists(dir / "run" / "dataset" / "manifest.json"));
  CHECK(fs::exists(dir / "run" / "dataset" / "ontology.json"));
  CHECK(fs::exists(dir / "run" / "dataset" / "records.jsonl"));
  CHECK(fs::exists(dir / "run" / "model.json"));
  CHECK(fs::exists(dir / "run" / "thresholds.json"));
  CHECK(fs::exists(dir / "run" / "results.json"));
  CHECK(fs::exists(dir / "run" / "report.json"));

  const auto report = nlohmann::json::parse(slurp(dir / "run" / "report.json"));
  CHECK(report.contains("map"));
  CHECK(report.contains("cmc"));
  CHECK(report.contains("average_f1"));
  CHECK(report["provenance"].contains("ontology_checksum"));
  fs::remove_all(dir);
}

TEST_CASE("subcommands chain on disk like the pipeline") {
  const fs::path dir = fresh_dir("chain");
  const std::string data = (dir / "data").string();
  CHECK(run("gen-synth --out " + data + " --seed 11 --identities 8 --images-per-id 4 --dim 16") ==
        0);
  const std::string manifest = data + "/manifest.json";
  CHECK(run("train-toy --dataset " + manifest + " --out " + (dir / "model.json").string() +
            " --epochs 40 --cls-epochs 60") == 0);
  CHECK(run("calibrate --dataset " + manifest + " --model " + (dir / "model.json").string() +
            " --out " + (dir / "thresholds.json").string()) == 0);
  CHECK(run("query --dataset " + manifest + " --model " + (dir / "model.json").string() +
            " --thresholds " + (dir / "thresholds.json").string() + " --filter region:lower" +
            " --out " + (dir / "results.json").string()) == 0);
  CHECK(run("evaluate --dataset " + manifest + " --model " + (dir / "model.json").string() +
            " --results " + (dir / "results.json").string() + " --thresholds " +
            (dir / "thresholds.json").string() + " --out " + (dir / "report.json").string()) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["num_queries"].get<int>() > 0);
  fs::remove_all(dir);
}

TEST_CASE("same seed twice gives identical datasets and reports") {
  const fs::path dir = fresh_dir("determinism");
  const std::string args =
      " --seed 5 --identities 6 --images-per-id 4 --dim 16 --flip-rate 0.1 --prob-jitter 0.3";
  CHECK(run("gen-synth --out " + (dir / "a").string() + args) == 0);
  CHECK(run("gen-synth --out " + (dir / "b").string() + args) == 0);
  CHECK(slurp(dir / "a" / "records.jsonl") == slurp(dir / "b" / "records.jsonl"));
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("filtering on the designated attribute lifts mAP on the confusable scenario") {
  const fs::path dir = fresh_dir("confusable");
  const std::string data = (dir / "data").string();
  CHECK(run("gen-synth --out " + data +
            " --seed 17 --scenario confusable --identities 8 --images-per-id 5 --dim 16"
            " --train-fraction 0 --feature-noise 0.02 --confusable-attr \"down black\"") == 0);
  const std::string manifest = data + "/manifest.json";

  // perfect probabilities: any mid threshold binarizes them correctly, so
  // calibrate on the gallery split stands in for train here
  CHECK(run("calibrate --dataset " + manifest + " --split gallery --out " +
            (dir / "t.json").string()) == 0);

  CHECK(run("query --dataset " + manifest + " --thresholds " + (dir / "t.json").string() +
            " --filter none --out " + (dir / "plain.json").string()) == 0);
  CHECK(run("evaluate --dataset " + manifest + " --results " + (dir / "plain.json").string() +
            " --out " + (dir / "plain_report.json").string()) == 0);

  CHECK(run("query --dataset " + manifest + " --thresholds " + (dir / "t.json").string() +
            " --filter \"attr:down black\" --out " + (dir / "filtered.json").string()) == 0);
  CHECK(run("evaluate --dataset " + manifest + " --results " + (dir / "filtered.json").string() +
            " --out " + (dir / "filtered_report.json").string()) == 0);

  const auto plain = nlohmann::json::parse(slurp(dir / "plain_report.json"));
  const auto filtered = nlohmann::json::parse(slurp(dir / "filtered_report.json"));
  CHECK(filtered["map"].get<double>() > plain["map"].get<double>());
  fs::remove_all(dir);
}

TEST_CASE("exit codes distinguish validation from io failures") {
  const fs::path dir = fresh_dir("exitcodes");

  SUBCASE("missing dataset file -> 2") {
    CHECK(run("train-toy --dataset " + (dir / "nope.json").string() + " --out " +
              (dir / "m.json").string()) == 2);
  }

  SUBCASE("ontology checksum mismatch -> 1") {
    const std::string data_a = (dir / "a").string();
    const std::string data_b = (dir / "b").string();
    CHECK(run("gen-synth --out " + data_a + " --seed 1 --identities 6 --images-per-id 4"
              " --dim 16") == 0);
    // dataset b uses a different ontology document
    const fs::path tiny = dir / "tiny.json";
    std::ofstream(tiny) << R"({
      "schema_version": 1, "name": "tiny",
      "regions": [
        {"name": "head"}, {"name": "upper"}, {"name": "lower"},
        {"name": "foot"}, {"name": "body", "composite": ["upper", "lower"]}
      ],
      "attributes": [{"name": "wearing hat", "region": "head"}]
    })";
    CHECK(run("gen-synth --out " + data_b + " --seed 1 --identities 6 --images-per-id 4"
              " --dim 16 --ontology " + tiny.string()) == 0);
    CHECK(run("train-toy --dataset " + data_a + "/manifest.json --out " +
              (dir / "model.json").string() + " --epochs 20 --cls-epochs 20") == 0);
    CHECK(run("calibrate --dataset " + data_b + "/manifest.json --model " +
              (dir / "model.json").string() + " --out " + (dir / "t.json").string()) == 1);
  }

  SUBCASE("invalid synth config -> 1") {
    CHECK(run("gen-synth --out " + (dir / "bad").string() + " --identities 1") == 1);
  }

  SUBCASE("unknown filter attribute -> 1") {
    const std::string data = (dir / "c").string();
    CHECK(run("gen-synth --out " + data + " --seed 2 --identities 6 --images-per-id 4"
              " --dim 16") == 0);
    CHECK(run("calibrate --dataset " + data + "/manifest.json --out " +
              (dir / "t2.json").string()) == 0);
    CHECK(run("query --dataset " + data + "/manifest.json --thresholds " +
              (dir / "t2.json").string() + " --filter attr:bogus --out " +
              (dir / "r.json").string()) == 1);
  }

  fs::remove_all(dir);
}
