#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "catebench/cli.hpp"
#include "catebench/dataset.hpp"
#include "catebench/format.hpp"
#include "catebench/synth.hpp"
#include "helpers.hpp"

using namespace catebench;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read(const fs::path& p) { return read_text_file(p.string()); }

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read(p)); }

std::string write_cohort(const fs::path& dir, const Cohort& c, const std::string& name = "cohort.csv") {
  const auto path = (dir / name).string();
  save_cohort(c, path);
  return path;
}

Cohort identical_arm_fixture() {
  std::vector<std::tuple<double, int, double>> rows;
  for (int i = 0; i < 30; ++i) {
    rows.emplace_back(40 + i % 10, 1 + i % 2, 45.0 + i);
    rows.emplace_back(40 + i % 10, 0, 45.0 + i);
  }
  return testing::cohort_of(rows);
}

}  // namespace

TEST_CASE("summarize writes json and text") {
  const auto dir = testing::scratch_dir("cli_summarize");
  const auto input = write_cohort(dir, generate(biased_scenario(), 1).cohort);
  const auto r = run({"summarize", "--input", input, "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  const auto j = read_json(dir / "out" / "summary.json");
  CHECK(j["n"] == 10000);
  CHECK(j["naive_difference"].get<double>() < 0.0);
  CHECK(j["mean_y_treated"].get<double>() < j["mean_y_control"].get<double>());
  CHECK(read(dir / "out" / "summary.txt").find("naive difference (treated - control): -") != std::string::npos);
  CHECK(r.out == read(dir / "out" / "summary.txt"));

  const auto quiet = run({"summarize", "--input", input, "--out", (dir / "q").string(), "--quiet"});
  CHECK(quiet.code == 0);
  CHECK(quiet.out.empty());
}

TEST_CASE("a missing column is an input error naming the column") {
  const auto dir = testing::scratch_dir("cli_missing");
  write_text_file((dir / "bad.csv").string(), "id,proficiency,diff_deviation\na,40,41\n");
  const auto r = run({"summarize", "--input", (dir / "bad.csv").string(), "--out", (dir / "out").string()});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("f2f") != std::string::npos);

  CHECK(run({"summarize", "--input", (dir / "nope.csv").string(), "--out", (dir / "o").string()}).code == kExitInput);
  CHECK(run({"summarize", "--input", (dir / "bad.csv").string()}).code == kExitInput);
  CHECK(run({"frobnicate"}).code == kExitInput);
  CHECK(run({}).code == kExitInput);
}

TEST_CASE("cate on identical arms reports zero effects") {
  const auto dir = testing::scratch_dir("cli_identical");
  const auto input = write_cohort(dir, identical_arm_fixture());
  const auto r =
      run({"cate", "--input", input, "--out", (dir / "out").string(), "--trees", "1", "--no-bootstrap", "--quiet"});
  REQUIRE(r.code == 0);
  const auto report = read_json(dir / "out" / "effect_report.json");
  REQUIRE(report["rows"].size() == 10);
  for (const auto& row : report["rows"]) CHECK(row["tau"] == 0.0);
  CHECK(read_json(dir / "out" / "summary.json")["ate"] == 0.0);
  CHECK(read(dir / "out" / "effect_report.csv").rfind("x1,mu0,mu1,tau\n", 0) == 0);
}

TEST_CASE("cate is byte-identical across runs and thread counts") {
  const auto dir = testing::scratch_dir("cli_repeat");
  const auto input = write_cohort(dir, testing::small_dose_cohort(9).cohort);
  for (const auto* threads : {"1", "4"}) {
    const auto out = dir / (std::string("out") + threads);
    CHECK(run({"cate", "--input", input, "--out", out.string(), "--seed", "11", "--threads", threads}).code == 0);
  }
  CHECK(run({"cate", "--input", input, "--out", (dir / "again").string(), "--seed", "11", "--threads", "1"}).code ==
        0);
  for (const auto* f : {"effect_report.csv", "effect_report.json", "summary.json"}) {
    CHECK(read(dir / "out1" / f) == read(dir / "out4" / f));
    CHECK(read(dir / "out1" / f) == read(dir / "again" / f));
  }
}

TEST_CASE("an empty treated arm exits with 3") {
  const auto dir = testing::scratch_dir("cli_empty_arm");
  const auto input = write_cohort(dir, testing::cohort_of({{40, 0, 1}, {41, 0, 2}, {44, 0, 3}}));
  const auto r = run({"cate", "--input", input, "--out", (dir / "out").string()});
  CHECK(r.code == kExitEmptyArm);
  CHECK(r.err.find("R1") != std::string::npos);
  CHECK(run({"phi", "--input", input, "--out", (dir / "out").string()}).code == kExitEmptyArm);
}

TEST_CASE("phi summary carries ATT2 equal to the cate ATT") {
  const auto dir = testing::scratch_dir("cli_phi");
  const auto input = write_cohort(dir, testing::small_dose_cohort(15).cohort);
  write_text_file((dir / "run.cfg").string(), "seed=5\ntrees=40\ndepth=2\n");
  const auto cfg = (dir / "run.cfg").string();
  REQUIRE(run({"cate", "--input", input, "--config", cfg, "--out", (dir / "cate").string()}).code == 0);
  REQUIRE(run({"phi", "--input", input, "--config", cfg, "--out", (dir / "phi").string()}).code == 0);
  const double att = read_json(dir / "cate" / "summary.json")["att"];
  const auto phi_summary = read_json(dir / "phi" / "summary.json");
  CHECK(std::abs(phi_summary["att2"].get<double>() - att) <= 1e-9);
  CHECK(phi_summary["independence"]["passed"] == true);
  CHECK(phi_summary["independence"]["violations"] == 0);

  const auto matrix = read_json(dir / "phi" / "phi_matrix.json");
  std::vector<int> x2 = matrix["x2_values"];
  for (int v : {1, 2, 3, 5, 10, 14}) CHECK(std::find(x2.begin(), x2.end(), v) != x2.end());
  CHECK(matrix["extrapolation_flags"].size() == x2.size());
}

TEST_CASE("phi on a single grid cell") {
  const auto dir = testing::scratch_dir("cli_phi_cell");
  const auto syn = testing::small_dose_cohort(16);
  const auto input = write_cohort(dir, syn.cohort);
  const auto r = run({"phi", "--input", input, "--out", (dir / "out").string(), "--x1", "50", "--x2", "3", "--quiet"});
  REQUIRE(r.code == 0);
  const auto csv = read(dir / "out" / "phi_surface.csv");
  CHECK(csv.rfind("x1,x2,phi\n50.0,3,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  CHECK(run({"phi", "--input", input, "--out", (dir / "bad").string(), "--x2", "0,1"}).code == kExitInput);
}

TEST_CASE("phi output is identical across thread counts") {
  const auto dir = testing::scratch_dir("cli_phi_threads");
  const auto input = write_cohort(dir, testing::small_dose_cohort(17).cohort);
  REQUIRE(run({"phi", "--input", input, "--out", (dir / "a").string(), "--threads", "1"}).code == 0);
  REQUIRE(run({"phi", "--input", input, "--out", (dir / "b").string(), "--threads", "3"}).code == 0);
  for (const auto* f : {"phi_surface.csv", "phi_matrix.json", "summary.json"}) CHECK(read(dir / "a" / f) == read(dir / "b" / f));
}

TEST_CASE("tree reports") {
  const auto dir = testing::scratch_dir("cli_tree");
  const auto constant = write_cohort(dir, testing::cohort_of({{40, 0, 5}, {45, 1, 5}, {50, 2, 5}}), "const.csv");
  REQUIRE(run({"tree", "--input", constant, "--out", (dir / "c").string()}).code == 0);
  CHECK(read(dir / "c" / "tree.txt") == "n0: n=3 | mean=5.0\n");

  const auto stump = write_cohort(dir, testing::cohort_of({{0, 0, 0}, {0, 0, 0}, {10, 0, 10}, {10, 0, 10}}), "stump.csv");
  REQUIRE(run({"tree", "--input", stump, "--out", (dir / "s").string(), "--depth", "1"}).code == 0);
  CHECK(read(dir / "s" / "tree.txt") ==
        "n0: proficiency < 5.0 | n=4 | mean=5.0\n"
        "  n1: n=2 | mean=0.0\n"
        "  n2: n=2 | mean=10.0\n");
  const auto j = read_json(dir / "s" / "tree.json");
  CHECK(j["features"].size() == 7);
  CHECK(j["tree"]["split"]["threshold"] == 5.0);

  // Renamed columns show up as feature names.
  SchemaConfig schema;
  schema.columns["proficiency"] = "pt_dev";
  save_cohort(testing::cohort_of({{0, 0, 0}, {0, 0, 0}, {10, 0, 10}, {10, 0, 10}}), (dir / "renamed.csv").string(),
              schema);
  write_text_file((dir / "schema.cfg").string(), "column.proficiency=pt_dev\n");
  REQUIRE(run({"tree", "--input", (dir / "renamed.csv").string(), "--config", (dir / "schema.cfg").string(), "--out",
               (dir / "r").string(), "--depth", "1"})
              .code == 0);
  CHECK(read(dir / "r" / "tree.txt").rfind("n0: pt_dev < 5.0", 0) == 0);
}

TEST_CASE("dose-reg") {
  const auto dir = testing::scratch_dir("cli_dose");
  const auto zero = write_cohort(dir, testing::cohort_of({{40, 0, 1}, {41, 0, 2}, {44, 0, 3}, {45, 0, 3}}), "zero.csv");
  CHECK(run({"dose-reg", "--input", zero, "--out", (dir / "z").string()}).code == kExitRankDeficient);

  const auto syn = generate(dose_response_scenario(), 2);
  const auto input = write_cohort(dir, syn.cohort);
  REQUIRE(run({"dose-reg", "--input", input, "--out", (dir / "d").string(), "--quiet"}).code == 0);
  const auto ols = read_json(dir / "d" / "ols.json");
  CHECK(ols["coefficients"][1].get<double>() > 0.0);
  CHECK(ols["regressors"] == nlohmann::json::array({"x1", "x2"}));
  const auto scatter = read(dir / "d" / "tau_scatter.csv");
  CHECK(std::count(scatter.begin(), scatter.end(), '\n') == static_cast<long>(syn.cohort.size() + 1));
}

TEST_CASE("synth is reproducible and loads back") {
  const auto dir = testing::scratch_dir("cli_synth");
  write_text_file((dir / "scenario.cfg").string(), "n=300\nselection=constant\nselection_p=0.3\n");
  const auto cfg = (dir / "scenario.cfg").string();
  for (const auto* name : {"a", "b"}) {
    REQUIRE(run({"synth", "--config", cfg, "--seed", "8", "--out", (dir / name).string(), "--quiet"}).code == 0);
  }
  CHECK(read(dir / "a" / "cohort.csv") == read(dir / "b" / "cohort.csv"));
  CHECK(read(dir / "a" / "cohort.truth.json") == read(dir / "b" / "cohort.truth.json"));
  CHECK(load_cohort((dir / "a" / "cohort.csv").string()).cohort.size() == 300);
  CHECK(run({"cate", "--input", (dir / "a" / "cohort.csv").string(), "--out", (dir / "cate").string(), "--quiet"})
            .code == 0);

  write_text_file((dir / "bad.cfg").string(), "noise_sd=-2\n");
  const auto bad = run({"synth", "--config", (dir / "bad.cfg").string(), "--out", (dir / "x").string()});
  CHECK(bad.code == kExitInput);
  CHECK(bad.err.find("noise_sd") != std::string::npos);
}

TEST_CASE("seed precedence: flag, then config, then environment") {
  const auto dir = testing::scratch_dir("cli_seed");
  const auto input = write_cohort(dir, testing::small_dose_cohort(3, 120).cohort);
  write_text_file((dir / "seed.cfg").string(), "seed=4\ntrees=3\n");
  write_text_file((dir / "plain.cfg").string(), "trees=3\n");
  auto seed_of = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"cate", "--input", input, "--out", (dir / "o").string(), "--quiet"};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(run(args).code == 0);
    return read_json(dir / "o" / "summary.json")["seed"].get<std::uint64_t>();
  };
  ::setenv("CATEBENCH_SEED", "9", 1);
  CHECK(seed_of({"--config", (dir / "plain.cfg").string()}) == 9);
  CHECK(seed_of({"--config", (dir / "seed.cfg").string()}) == 4);
  CHECK(seed_of({"--config", (dir / "seed.cfg").string(), "--seed", "7"}) == 7);
  ::unsetenv("CATEBENCH_SEED");
  CHECK(seed_of({"--config", (dir / "plain.cfg").string()}) == 0);

  write_text_file((dir / "typo.cfg").string(), "sed=4\n");
  CHECK(run({"cate", "--input", input, "--config", (dir / "typo.cfg").string(), "--out", (dir / "t").string()}).code ==
        kExitInput);
  CHECK(run({"cate", "--input", input, "--out", (dir / "t").string(), "--depth", "0"}).code == kExitInput);
}
