#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ecgvae/cli.hpp"
#include "ecgvae/config.hpp"
#include "ecgvae/errors.hpp"
#include "ecgvae/persistence.hpp"
#include "support/tempdir.hpp"

using namespace ecgvae;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "ecgvae");
  return cli_dispatch(args);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config("# corpus\nseed = 4\n  heart_rate_bpm=60, 70  # comment\n\n");
  CHECK(cfg.size() == 2);
  CHECK(cfg.at("seed") == "4");
  CHECK(cfg.at("heart_rate_bpm") == "60, 70");
  CHECK_THROWS_AS(parse_config("seed 4\n"), DataError);
  CHECK_THROWS_AS(parse_config("a=1\na=2\n"), DataError);
  CHECK_THROWS_AS(parse_config("=1\n"), DataError);
}

TEST_CASE("cli pipeline") {
  TempDir dir("cli");
  const auto p = [&](const std::string& name) { return (dir / name).string(); };

  CHECK(run({"synth", "--records", "4", "--seed", "3", "--out", p("corpus")}) == kExitOk);
  CHECK(run({"preprocess", "--in", p("corpus"), "--out", p("cycles.ecgc")}) == kExitOk);
  CHECK(load_dataset(p("cycles.ecgc")).cycles.size() > 20);
  CHECK(run({"train", "--data", p("cycles.ecgc"), "--epochs", "1", "--batch", "8", "--seed", "1",
             "--out", p("m.ecgv"), "--history", p("loss.csv"), "--quiet"}) == kExitOk);
  CHECK(read_loss_history(p("loss.csv")).size() == 1);
  CHECK(run({"generate", "--model", p("m.ecgv"), "--count", "20", "--seed", "2", "--out",
             p("gen.ecgc")}) == kExitOk);
  CHECK(load_dataset(p("gen.ecgc")).cycles.size() == 20);
  CHECK(run({"encode", "--model", p("m.ecgv"), "--data", p("gen.ecgc"), "--out", p("f.csv")}) ==
        kExitOk);
  CHECK(run({"traverse", "--model", p("m.ecgv"), "--feature", "3", "--out", p("trav")}) ==
        kExitOk);
  CHECK(std::filesystem::exists(dir / "trav" / "feature_03.svg"));
  CHECK(run({"mmd", "--a", p("gen.ecgc"), "--b", p("cycles.ecgc"), "--out", p("mmd.csv")}) ==
        kExitOk);
  CHECK(run({"plot", "--data", p("cycles.ecgc"), "--indices", "0,2", "--out", p("fig.svg")}) ==
        kExitOk);

  SUBCASE("mmd of a dataset against itself is zero") {
    CHECK(run({"mmd", "--a", p("gen.ecgc"), "--b", p("gen.ecgc"), "--out", p("self.csv")}) ==
          kExitOk);
    const auto text = slurp(p("self.csv"));
    const auto row = text.substr(text.find('\n') + 1);
    std::vector<std::string> cells;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 8);
    CHECK(std::stod(cells[5]) <= 1e-12);
  }
  SUBCASE("usage errors exit 1") {
    CHECK(run({"traverse", "--model", p("m.ecgv"), "--feature", "25", "--out", p("t2")}) ==
          kExitUsage);
    CHECK(run({"traverse", "--model", p("m.ecgv"), "--out", p("t2")}) == kExitUsage);
    CHECK(run({"generate", "--model", p("m.ecgv"), "--count", "5", "--out", p("x.ecgc")}) ==
          kExitUsage);
    CHECK(run({"synth", "--records", "2", "--out", p("c2")}) == kExitUsage);
    CHECK(run({"train", "--data", p("cycles.ecgc"), "--out", p("m2.ecgv")}) == kExitUsage);
    CHECK(run({"frobnicate"}) == kExitUsage);
    CHECK(run({}) == kExitUsage);
    CHECK(run({"mmd", "--a", p("gen.ecgc"), "--b", p("gen.ecgc"), "--sigma", "wide"}) ==
          kExitUsage);
  }
  SUBCASE("data errors exit 2") {
    std::ofstream(p("junk.ecgc")) << "not a dataset";
    CHECK(run({"plot", "--data", p("junk.ecgc"), "--indices", "0", "--out", p("j.svg")}) ==
          kExitData);
    CHECK(run({"encode", "--model", p("missing.ecgv"), "--data", p("gen.ecgc"), "--out",
               p("f2.csv")}) == kExitData);
  }
  SUBCASE("config file fills unset flags; flags win") {
    std::ofstream(p("gen.cfg")) << "seed = 2\ncount = 7\n";
    CHECK(run({"generate", "--model", p("m.ecgv"), "--config", p("gen.cfg"), "--out",
               p("cfg.ecgc")}) == kExitOk);
    CHECK(load_dataset(p("cfg.ecgc")).cycles.size() == 7);
    CHECK(run({"generate", "--model", p("m.ecgv"), "--config", p("gen.cfg"), "--count", "20",
               "--out", p("cfg20.ecgc")}) == kExitOk);
    CHECK(slurp(p("cfg20.ecgc")) == slurp(p("gen.ecgc")));
    std::ofstream(p("bad.cfg")) << "colour = blue\n";
    CHECK(run({"generate", "--model", p("m.ecgv"), "--config", p("bad.cfg"), "--seed", "1",
               "--out", p("x.ecgc")}) == kExitUsage);
  }
  SUBCASE("synth config carries corpus ranges") {
    std::ofstream(p("corpus.cfg")) << "seed = 5\nrecords = 2\nheart_rate_bpm = 60,60\n"
                                      "hr_jitter_fraction = 0\n";
    CHECK(run({"synth", "--config", p("corpus.cfg"), "--out", p("c3")}) == kExitOk);
    const auto peaks = slurp(dir / "c3" / "r_peaks.csv");
    CHECK(peaks.find("rec00000,250\n") != std::string::npos);
    CHECK(peaks.find("rec00000,750\n") != std::string::npos);
  }
}
