#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kCli = STMKIT_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log =
      fs::temp_directory_path() / ("stmkit_cli_" + std::to_string(counter++));
  const std::string cmd =
      std::string(kCli) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  fs::remove(log);
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "stmkit_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kGenArgs =
    "--p 50 --n 60 --K 3 --doc-length 40 --anchors-per-topic 2 "
    "--xi 0.05 --eta 0.3 --seed 11";

}  // namespace

TEST_CASE("generate emits the full dataset") {
  const fs::path dir = scratch_dir("gen");
  const RunResult r =
      run_cli("generate " + kGenArgs + " --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  for (const char* name :
       {"counts.tsv", "A_true.tsv", "W_true.tsv", "anchors.txt",
        "config.json"})
    CHECK(fs::exists(dir / name));

  SUBCASE("the same seed reproduces every byte") {
    const fs::path again = scratch_dir("gen_again");
    REQUIRE(run_cli("generate " + kGenArgs + " --out " + again.string())
                .exit_code == 0);
    CHECK(slurp(dir / "counts.tsv") == slurp(again / "counts.tsv"));
    CHECK(slurp(dir / "A_true.tsv") == slurp(again / "A_true.tsv"));
  }

  SUBCASE("estimate and evaluate complete the pipeline") {
    const fs::path out = scratch_dir("est");
    const RunResult est = run_cli("estimate --counts " +
                                  (dir / "counts.tsv").string() +
                                  " --anchors " + (dir / "anchors.txt").string() +
                                  " --out " + out.string());
    REQUIRE(est.exit_code == 0);
    CHECK(fs::exists(out / "A_hat.tsv"));
    CHECK(fs::exists(out / "B_hat.tsv"));
    const std::string report = slurp(out / "report.json");
    CHECK(report.find("\"lambda_used\"") != std::string::npos);
    CHECK(report.find("\"t_star\"") != std::string::npos);
    CHECK(report.find("\"harmonic_doc_length\"") != std::string::npos);

    const RunResult ev =
        run_cli("evaluate --a-hat " + (out / "A_hat.tsv").string() +
                " --a-ref " + (dir / "A_true.tsv").string());
    REQUIRE(ev.exit_code == 0);
    CHECK(ev.output.find("aligned_l1_per_topic") != std::string::npos);
    CHECK(ev.output.find("permutation") != std::string::npos);
  }

  SUBCASE("triplet output stays readable by estimate") {
    const fs::path tdir = scratch_dir("gen_triplet");
    REQUIRE(run_cli("generate " + kGenArgs + " --triplet --out " +
                    tdir.string())
                .exit_code == 0);
    const std::string head = slurp(tdir / "counts.tsv").substr(0, 6);
    CHECK(head == "50 60\n");
    const fs::path out = scratch_dir("est_triplet");
    CHECK(run_cli("estimate --counts " + (tdir / "counts.tsv").string() +
                  " --anchors " + (tdir / "anchors.txt").string() + " --out " +
                  out.string())
              .exit_code == 0);
  }
}

TEST_CASE("usage errors exit with 64") {
  CHECK(run_cli("generate --no-such-flag 3").exit_code == 64);
  CHECK(run_cli("estimate").exit_code == 64);  // missing required flags
  CHECK(run_cli("").exit_code == 64);
}

TEST_CASE("bad inputs exit with 1") {
  const fs::path dir = scratch_dir("bad");
  const RunResult r =
      run_cli("estimate --counts " + (dir / "absent.tsv").string() +
              " --anchors " + (dir / "absent.txt").string() + " --out " +
              dir.string());
  CHECK(r.exit_code == 1);
}

TEST_CASE("an anchor word absent from the corpus exits with 2") {
  const fs::path dir = scratch_dir("dead_anchor");
  {
    std::ofstream counts(dir / "counts.tsv");
    counts << "0 0 0\n2 2 2\n1 1 1\n2 1 3\n";
    std::ofstream anchors(dir / "anchors.txt");
    anchors << "1 1\n2 2\n";
  }
  const RunResult r =
      run_cli("estimate --counts " + (dir / "counts.tsv").string() +
              " --anchors " + (dir / "anchors.txt").string() + " --out " +
              (dir / "out").string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("sweep runs from a config file") {
  const fs::path dir = scratch_dir("sweep");
  {
    std::ofstream cfg(dir / "sweep.json");
    cfg << R"({
      "synth": {"p": 40, "n": 50, "K": 2, "doc_length": 30,
                 "anchors_per_topic": 2, "xi": 0.05},
      "etas": [0.0, 0.5],
      "reps": 2,
      "seed": 5
    })";
  }
  const RunResult r = run_cli("sweep --config " + (dir / "sweep.json").string() +
                              " --out " + (dir / "sweep.csv").string());
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("grid_value,reps,mean_loss,sd_loss,sparsity,seconds", 0) ==
        0);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 3);

  SUBCASE("a grid must be either etas or factors, not both") {
    {
      std::ofstream cfg(dir / "both.json");
      cfg << R"({
        "synth": {"p": 40, "n": 50, "K": 2, "doc_length": 30,
                   "anchors_per_topic": 2, "xi": 0.05},
        "etas": [0.0],
        "factors": [1.0],
        "reps": 2
      })";
    }
    CHECK(run_cli("sweep --config " + (dir / "both.json").string() +
                  " --out " + (dir / "x.csv").string())
              .exit_code == 1);
  }

  SUBCASE("unknown config keys are rejected") {
    {
      std::ofstream cfg(dir / "typo.json");
      cfg << R"({
        "synth": {"p": 40, "n": 50, "K": 2, "doc_length": 30,
                   "anchors_per_topic": 2, "xi": 0.05},
        "etaz": [0.0],
        "reps": 2
      })";
    }
    CHECK(run_cli("sweep --config " + (dir / "typo.json").string() +
                  " --out " + (dir / "y.csv").string())
              .exit_code == 1);
  }
}

TEST_CASE("rate sweeps report a slope") {
  const fs::path dir = scratch_dir("rate");
  {
    std::ofstream cfg(dir / "rate.json");
    cfg << R"({
      "synth": {"p": 40, "n": 40, "K": 2, "doc_length": 30,
                 "anchors_per_topic": 2, "xi": 0.05, "eta": 0.5},
      "factors": [1.0, 4.0],
      "reps": 2,
      "seed": 6
    })";
  }
  const RunResult r = run_cli("sweep --config " + (dir / "rate.json").string() +
                              " --out " + (dir / "rate.csv").string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("\"slope\"") != std::string::npos);
  CHECK(fs::exists(dir / "rate.csv"));
}
