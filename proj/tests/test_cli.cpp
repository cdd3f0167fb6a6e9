#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "irt/cli.hpp"
#include "irt/io.hpp"
#include "irt/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run irtvi(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = irt::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("irt_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Relative path -> contents for every regular file under `dir`.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

// A small generator spec written to `dir`/spec.json.
fs::path small_spec(const fs::path& dir) {
  irt::GeneratorSpec spec;
  spec.responders = 12;
  spec.datasets = {{"alpha", 10, {}}, {"beta", 20, irt::Sampler::normal(1.0, 1.0)}};
  spec.logit_gamma = irt::Sampler::normal(-2.0, 1.0);
  spec.seed = 3;
  const auto path = dir / "spec.json";
  irt::write_text_file(path, irt::generator_to_json(spec).dump(2));
  return path;
}

fs::path simulate_small(const fs::path& dir) {
  const auto sim = dir / "sim";
  const auto r = irtvi({"simulate", "--config", small_spec(dir).string(), "--out", sim.string()});
  REQUIRE(r.code == 0);
  return sim;
}

}  // namespace

TEST_CASE("simulate writes responses, truth and the generator config") {
  const auto dir = scratch("simulate");
  const auto sim = simulate_small(dir);
  for (const char* f : {"generator.json", "responses.csv", "truth_responders.csv", "truth_items.csv"})
    CHECK(fs::exists(sim / f));
  const auto data = irt::load_responses(sim / "responses.csv", irt::ResponseFormat::Csv);
  CHECK(data.n_responders() == 12);
  CHECK(data.n_items() == 30);
  const auto again = dir / "again";
  irtvi({"simulate", "--config", (dir / "spec.json").string(), "--out", again.string()});
  CHECK(tree(sim) == tree(again));
  const auto reseeded = dir / "reseeded";
  irtvi({"simulate", "--config", (dir / "spec.json").string(), "--seed", "9", "--out", reseeded.string()});
  CHECK(slurp(sim / "responses.csv") != slurp(reseeded / "responses.csv"));
  fs::remove_all(dir);
}

TEST_CASE("simulate, fit, analyze pipeline") {
  const auto dir = scratch("pipeline");
  const auto sim = simulate_small(dir);
  const auto out = dir / "fit";
  const auto f = irtvi({"fit", "--responses", (sim / "responses.csv").string(), "--steps", "200",
                        "--seed", "4", "--out", out.string()});
  REQUIRE(f.code == 0);
  CHECK(f.out.find("final_elbo") != std::string::npos);
  for (const char* name : {"fit.json", "items.csv", "responders.csv", "datasets.csv"})
    CHECK(fs::exists(out / name));
  const auto j = irt::read_json_file(out / "fit.json");
  CHECK(j.at("seed").get<int>() == 4);
  CHECK(j.at("config").at("steps").get<int>() == 200);
  CHECK(j.at("sigma_alpha").get<double>() == 0.4);

  const auto an = dir / "analysis";
  const auto a = irtvi({"analyze", "--responses", (sim / "responses.csv").string(), "--fit",
                        (out / "fit.json").string(), "--truth", sim.string(), "--out", an.string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("recovery pearson_beta") != std::string::npos);
  const auto analysis = irt::read_json_file(an / "analysis.json");
  CHECK(analysis.contains("recovery"));
  CHECK(analysis["recovery"]["spearman_theta"].get<double>() > 0.5);
  CHECK(fs::exists(an / "ability_accuracy.csv"));
  // analyze re-derives the same tables the fit wrote.
  CHECK(slurp(an / "items.csv") == slurp(out / "items.csv"));
  CHECK(slurp(an / "datasets.csv") == slurp(out / "datasets.csv"));
  fs::remove_all(dir);
}

TEST_CASE("fit is byte-for-byte deterministic") {
  const auto dir = scratch("determinism");
  const auto sim = simulate_small(dir);
  for (const char* name : {"a", "b"}) {
    REQUIRE(irtvi({"fit", "--responses", (sim / "responses.csv").string(), "--steps", "100",
                   "--seed", "11", "--out", (dir / name).string()})
                .code == 0);
  }
  CHECK(tree(dir / "a") == tree(dir / "b"));
  fs::remove_all(dir);
}

TEST_CASE("sweep records every grid run") {
  const auto dir = scratch("sweep");
  const auto sim = simulate_small(dir);
  const auto r = irtvi({"sweep", "--responses", (sim / "responses.csv").string(), "--steps", "60",
                        "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  const auto j = irt::read_json_file(dir / "out" / "fit.json");
  REQUIRE(j.at("sweep_runs").size() == 6);
  CHECK(j.at("sweep_runs")[1].at("seed").get<std::uint64_t>() == 10007u);
  CHECK_FALSE(j.at("chosen_sigma_alpha").is_null());
  CHECK(j.at("sigma_alpha") == j.at("chosen_sigma_alpha"));
  fs::remove_all(dir);
}

TEST_CASE("stability with an empty exclusion set is a self-comparison") {
  const auto dir = scratch("stability_empty");
  const auto sim = simulate_small(dir);
  const auto out = dir / "out";
  const auto r = irtvi({"stability", "--responses", (sim / "responses.csv").string(), "--steps",
                        "80", "--exclude-responders", "", "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("leh pearson 1.000000 median_abs_diff 0.000000") != std::string::npos);
  CHECK(r.out.find("log_alpha pearson 1.000000") != std::string::npos);
  CHECK(fs::exists(out / "stability.csv"));
  CHECK(fs::exists(out / "excluded" / "fit.json"));
  fs::remove_all(dir);
}

TEST_CASE("stability excluding responders and unanimous items") {
  const auto dir = scratch("stability");
  const auto sim = simulate_small(dir);
  const auto top = irtvi({"stability", "--responses", (sim / "responses.csv").string(), "--steps",
                          "80", "--exclude-top-k", "2", "--out", (dir / "top").string()});
  REQUIRE(top.code == 0);
  CHECK(top.out.find("excluded 2 responders, 0 items") != std::string::npos);
  const auto excl = irt::read_json_file(dir / "top" / "excluded" / "fit.json");
  CHECK(excl.at("responder_ids").size() == 10);

  const auto una = irtvi({"stability", "--responses", (sim / "responses.csv").string(), "--steps",
                          "80", "--exclude-unanimous", "--out", (dir / "una").string()});
  CHECK(una.code == 0);

  const auto bad = irtvi({"stability", "--responses", (sim / "responses.csv").string(),
                          "--exclude-responders", "nobody", "--out", (dir / "bad").string()});
  CHECK(bad.code == 2);
  const auto both = irtvi({"stability", "--responses", (sim / "responses.csv").string(),
                           "--exclude-top-k", "2", "--exclude-unanimous", "--out", (dir / "both").string()});
  CHECK(both.code == 2);
  fs::remove_all(dir);
}

TEST_CASE("duplicate cell: input-error and no outputs") {
  const auto dir = scratch("duplicate");
  const auto file = dir / "responses.csv";
  irt::write_text_file(file,
                       "responder_id,item_id,dataset_id,correct\n"
                       "r1,i1,d,1\nr1,i2,d,0\nr2,i1,d,0\nr2,i2,d,1\nr2,i2,d,0\n");
  const auto out = dir / "out";
  const auto r = irtvi({"fit", "--responses", file.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: input-error: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(r.err.find("duplicate") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
  fs::remove_all(dir);
}

TEST_CASE("usage and io errors") {
  CHECK(irtvi({}).code == 2);
  CHECK(irtvi({"frobnicate"}).code == 2);
  CHECK(irtvi({"fit", "--steps", "-3"}).code == 2);
  CHECK(irtvi({"fit", "--out", "/tmp/x"}).code == 2);
  CHECK(irtvi({"fit", "--responses", "/nonexistent.csv", "--out", "/tmp/x"}).code == 4);
  CHECK(irtvi({"fit", "--sweep", "--sigma-alpha", "0.3"}).code == 2);
  CHECK(irtvi({"simulate", "--out", "/tmp/x"}).code == 2);
  const auto help = irtvi({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("stability") != std::string::npos);
}

TEST_CASE("--fail-on-degenerate maps a diverged fit to exit 3") {
  const auto dir = scratch("degenerate");
  const auto sim = simulate_small(dir);
  const auto args = std::vector<std::string>{"fit", "--responses", (sim / "responses.csv").string(),
                                             "--steps", "100", "--lr", "1e6", "--out",
                                             (dir / "out").string()};
  auto strict = args;
  strict.push_back("--fail-on-degenerate");
  CHECK(irtvi(args).code == 0);
  CHECK(irtvi(strict).code == 3);
  const auto j = irt::read_json_file(dir / "out" / "fit.json");
  CHECK(j.at("degenerate").get<bool>());
  fs::remove_all(dir);
}

TEST_CASE("the installed executable reports exit codes") {
  const auto dir = scratch("process");
  const auto cmd = std::string(IRTVI_EXE) + " fit --responses " + (dir / "missing.csv").string() +
                   " --out " + (dir / "out").string() + " 2>" + (dir / "err.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 4);
  CHECK(slurp(dir / "err.txt").rfind("error: io-error: ", 0) == 0);
  fs::remove_all(dir);
}
