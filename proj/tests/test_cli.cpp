#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "casp/io.hpp"

namespace fs = std::filesystem;

namespace {
const std::string kCli = CASP_CLI_PATH;
const std::string kFixture = CASP_FIXTURE_DIR;

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "casp-test-cli";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) { return casp::read_text_file(p.string()); }
}  // namespace

TEST_CASE("simulate writes a complete run directory") {
  const fs::path dir = scratch() / "r1";
  fs::remove_all(dir);
  CHECK(run("simulate counterexample --reps 2 --n 300 --seed 9 --out " + dir.string()) == 0);
  for (const char* name :
       {"manifest.json", "sweep.csv", "frontier.csv", "comparator.csv", "summary.txt"}) {
    CHECK(fs::exists(dir / name));
  }
  const std::string manifest = slurp(dir / "manifest.json");
  CHECK(manifest.find("\"command\"") != std::string::npos);
  CHECK(manifest.find("config_hash") != std::string::npos);
}

TEST_CASE("existing runs are protected unless forced") {
  const fs::path dir = scratch() / "r2";
  fs::remove_all(dir);
  const std::string base = "simulate counterexample --reps 1 --n 200 --seed 4 --out " + dir.string();
  CHECK(run(base) == 0);
  CHECK(run(base) == 2);
  CHECK(run(base + " --force") == 0);
}

TEST_CASE("identical configurations produce byte-identical artifacts") {
  const fs::path a = scratch() / "r3a";
  const fs::path b = scratch() / "r3b";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string flags = "simulate coupling --reps 2 --n 400 --seed 12 --threads 2 --out ";
  CHECK(run(flags + a.string()) == 0);
  CHECK(run(flags + b.string()) == 0);
  CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
  CHECK(slurp(a / "comparator.csv") == slurp(b / "comparator.csv"));
  CHECK(slurp(a / "frontier.csv") == slurp(b / "frontier.csv"));
}

TEST_CASE("bad inputs map to exit 2") {
  CHECK(run("simulate nonsense --out " + (scratch() / "x1").string()) == 2);
  CHECK(run("simulate counterexample --lambda -0.5 --reps 1 --n 200 --out " +
            (scratch() / "x2").string()) == 2);
  CHECK(run("app --out " + (scratch() / "x3").string()) == 2);  // missing dataset path
  CHECK(run("definitely-not-a-command") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("missing data maps to exit 3") {
  CHECK(run("app /nonexistent/casp-data --reps 1 --out " + (scratch() / "x4").string()) == 3);
}

TEST_CASE("config file merges under explicit flags") {
  const fs::path dir = scratch() / "r4";
  const fs::path cfg = scratch() / "cfg.json";
  fs::remove_all(dir);
  std::ofstream(cfg) << "{\"lambda\": 0.2, \"reps\": 2, \"n\": 250}\n";
  CHECK(run("simulate counterexample --config " + cfg.string() + " --lambda 0.07 --seed 6 --out " +
            dir.string()) == 0);
  const std::string manifest = slurp(dir / "manifest.json");
  // CLI flag wins over the file; file fills what the CLI left unset.
  CHECK(manifest.find("\"lambda\": 0.07") != std::string::npos);
  CHECK(manifest.find("\"n\": 250") != std::string::npos);

  const fs::path bad = scratch() / "bad.json";
  std::ofstream(bad) << "{\"lambdaz\": 0.2}\n";
  CHECK(run("simulate counterexample --config " + bad.string() + " --out " +
            (scratch() / "r5").string()) == 2);
}

TEST_CASE("out root environment variable places runs") {
  const fs::path root = scratch() / "envroot";
  fs::remove_all(root);
  const std::string cmd = "CASP_OUT_ROOT=" + root.string() + " \"" + kCli +
                          "\" simulate counterexample --reps 1 --n 200 --seed 3 >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(root / "simulate-counterexample-seed3" / "manifest.json"));
}

TEST_CASE("lambda sweep command") {
  const fs::path dir = scratch() / "r6";
  fs::remove_all(dir);
  CHECK(run("sweep-lambda --block coupling --reps 1 --n 300 --seed 2 --out " + dir.string()) ==
        0);
  const std::string csv = slurp(dir / "lambda_path.csv");
  CHECK(csv.rfind("lambda,dr_value,burden,ess,max_w,mode_freq\n", 0) == 0);
}

TEST_CASE("app command end to end plus report merge") {
  const fs::path app_dir = scratch() / "r7";
  fs::remove_all(app_dir);
  CHECK(run("app " + kFixture +
            " --warm-start 6 --max-contexts 500 --l 8 --reps 2 --imputed-labels --threads 2 "
            "--max-policies 12 --folds 3 --seed 5 --out " +
            app_dir.string()) == 0);
  for (const char* name : {"manifest.json", "pool.csv", "support_map.csv", "comparator.csv",
                           "lambda_path.csv", "generator_delta.csv", "diagnostics.csv",
                           "summary.txt"}) {
    CHECK(fs::exists(app_dir / name));
  }

  const fs::path sim_dir = scratch() / "r8";
  fs::remove_all(sim_dir);
  CHECK(run("simulate counterexample --reps 1 --n 200 --seed 1 --out " + sim_dir.string()) == 0);
  const fs::path rep_dir = scratch() / "r9";
  fs::remove_all(rep_dir);
  CHECK(run("report " + sim_dir.string() + " --out " + rep_dir.string()) == 0);
  CHECK(fs::exists(rep_dir / "report.txt"));
  CHECK(fs::exists(rep_dir / "cross_block.csv"));
}

TEST_CASE("theory check honors the failure exit code") {
  // Perturbed burdens must break the second-moment identity; the command
  // reports failure through exit 4. A tiny grid keeps this fast.
  const fs::path dir = scratch() / "r10";
  fs::remove_all(dir);
  CHECK(run("theory-check --burden-perturbation 0.2 --reps 2 --out " + dir.string()) == 4);
  CHECK(fs::exists(dir / "checks.csv"));
}
