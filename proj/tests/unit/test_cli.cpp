#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "graphaug/cli.hpp"

namespace fs = std::filesystem;
using namespace graphaug;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "graphaug");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("graphaug-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kToyRun =
    "[run]\n"
    "seeds = 1, 2\n"
    "[data]\n"
    "source = block\n"
    "users = 40\n"
    "items = 40\n"
    "blocks = 4\n"
    "min_interactions = 4\n"
    "max_interactions = 10\n"
    "[train]\n"
    "dim = 8\n"
    "hops = 0, 1\n"
    "epochs = 3\n"
    "batch_size = 64\n"
    "learning_rate = 0.01\n";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("stats") {
    TempDir dir;
    const auto toy = dir.write("toy.txt", "a x\na y\nb x\n");
    auto r = invoke({"stats", toy.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("density\t7.5e-1") != std::string::npos);
    r = invoke({"stats", "--counts", "50821", "57440", "1172425"});
    CHECK(r.code == 0);
    CHECK(r.out.find("density\t4.0e-4") != std::string::npos);
    CHECK(invoke({"stats", (dir.path / "missing.txt").string()}).code == 2);
    CHECK(invoke({"stats", dir.write("bad.txt", "a\n").string()}).code == 2);
  }

  TEST_CASE("usage errors") {
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"frobnicate"}).code == 1);
    CHECK(invoke({"train"}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
  }

  TEST_CASE("train writes one checkpoint per seed and eval reproduces its metrics") {
    TempDir dir;
    const auto cfg = dir.write("run.cfg", std::string(kToyRun) + "[run]\noutput = out\n");
    const auto r = invoke({"train", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    for (int seed : {1, 2}) {
      const auto tag = "seed" + std::to_string(seed);
      const auto ck = dir.path / "out" / ("checkpoint-" + tag + ".txt");
      REQUIRE(fs::exists(ck));
      CHECK(fs::exists(dir.path / "out" / ("epochs-" + tag + ".tsv")));
      const auto again = dir.path / ("eval-" + tag + ".tsv");
      CHECK(invoke({"eval", "--checkpoint", ck.string(), "--output", again.string()}).code == 0);
      CHECK(slurp(again) == slurp(dir.path / "out" / ("metrics-" + tag + ".tsv")));
    }
    CHECK_FALSE(fs::exists(dir.path / "out" / "checkpoint-seed3.txt"));
  }

  TEST_CASE("train is deterministic") {
    TempDir a, b;
    const auto ca = a.write("run.cfg", kToyRun);
    const auto cb = b.write("run.cfg", kToyRun);
    REQUIRE(invoke({"train", "--config", ca.string()}).code == 0);
    REQUIRE(invoke({"train", "--config", cb.string()}).code == 0);
    CHECK(slurp(a.path / "checkpoint-seed1.txt") == slurp(b.path / "checkpoint-seed1.txt"));
    CHECK(slurp(a.path / "epochs-seed2.tsv") == slurp(b.path / "epochs-seed2.tsv"));
  }

  TEST_CASE("input and numeric failures map to exit codes") {
    TempDir dir;
    CHECK(invoke({"train", "--config", (dir.path / "none.cfg").string()}).code == 2);
    const auto missing = dir.write("m.cfg", "[data]\nsource = file\npath = nowhere.txt\n");
    CHECK(invoke({"train", "--config", missing.string()}).code == 2);
    const auto typo = dir.write("t.cfg", "[train]\nepoch = 3\n");
    CHECK(invoke({"train", "--config", typo.string()}).code == 2);
    const auto empty_seeds = dir.write("s.cfg", "[run]\nseeds = \n");
    CHECK(invoke({"train", "--config", empty_seeds.string()}).code == 2);
    const auto blowup = dir.write("b.cfg", std::string(kToyRun) + "learning_rate = 1e300\n");
    const auto r = invoke({"train", "--config", blowup.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("epoch ") != std::string::npos);
    CHECK(invoke({"eval", "--checkpoint", (dir.path / "no.txt").string()}).code == 2);
  }

  TEST_CASE("file datasets resolve relative to the config") {
    TempDir dir;
    fs::create_directories(dir.path / "data");
    std::string edges;
    for (int u = 0; u < 12; ++u)
      for (int v = 0; v < 12; ++v)
        if ((u + v) % 3 == 0) edges += "u" + std::to_string(u) + " i" + std::to_string(v) + "\n";
    dir.write("data/edges.txt", edges);
    const auto cfg = dir.write("run.cfg",
                               "[data]\npath = data/edges.txt\n"
                               "[train]\ndim = 4\nhops = 0, 1\nepochs = 2\nbatch_size = 16\n");
    CHECK(invoke({"train", "--config", cfg.string()}).code == 0);
    CHECK(fs::exists(dir.path / "checkpoint-seed1.txt"));
  }

  TEST_CASE("experiment protocols") {
    TempDir dir;
    const auto cfg = dir.write("run.cfg", std::string(kToyRun) +
                                              "[run]\nvariants = full, w/o-gib\n"
                                              "[noise]\nratios = 0.05, 0.1, 0.15, 0.2, 0.25\n");
    auto r = invoke({"experiment", "--protocol", "alblation", "--config", cfg.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("--protocol") != std::string::npos);

    r = invoke({"experiment", "--protocol", "noise", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    std::ifstream noise(dir.path / "noise.tsv");
    const auto rows = read_report(noise);
    CHECK(rows.size() == 5 * 2);
    std::stringstream again;
    write_report(rows, again);
    CHECK(read_report(again) == rows);

    r = invoke({"experiment", "--protocol", "hyperparam-sweep", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    std::ifstream sweep(dir.path / "hyperparam-sweep.tsv");
    const auto sweep_rows = read_report(sweep);
    REQUIRE(sweep_rows.size() == 5);
    CHECK(sweep_rows[0].group == "temperature=0.1");
    CHECK(sweep_rows[4].group == "temperature=0.9");

    r = invoke({"experiment", "--protocol", "ablation", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    std::ifstream abl(dir.path / "ablation.tsv");
    CHECK(read_report(abl).size() == 2 * 5);

    r = invoke({"experiment", "--protocol", "groups", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    std::ifstream grp(dir.path / "groups.tsv");
    const auto group_rows = read_report(grp);
    REQUIRE_FALSE(group_rows.empty());
    CHECK(group_rows.front().group.rfind("user:", 0) == 0);
  }

  TEST_CASE("output directory override") {
    TempDir dir, elsewhere;
    const auto cfg = dir.write("run.cfg", std::string(kToyRun) + "[run]\nseeds = 4\n");
    ::setenv(cli::kOutputDirEnv, elsewhere.path.c_str(), 1);
    const int code = invoke({"train", "--config", cfg.string()}).code;
    ::unsetenv(cli::kOutputDirEnv);
    CHECK(code == 0);
    CHECK(fs::exists(elsewhere.path / "checkpoint-seed4.txt"));
    CHECK_FALSE(fs::exists(dir.path / "checkpoint-seed4.txt"));
  }
}
