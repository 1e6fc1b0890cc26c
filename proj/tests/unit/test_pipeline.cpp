#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlab/errors.hpp"
#include "nlab/pipeline.hpp"
#include "oracles.hpp"

using namespace nlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small(const std::string& out) {
  RunConfig c = parse_config(
      "h = 0.25\nS = 5\nradii = 2,3,4\nclosure_radii = 1,1.5,2\nloglemma_radii = 1,2\nharnack_grid = 2\n"
      "stability_trials = 4\n");
  c.out = out;
  return c;
}

const StageRecord* find(const RunManifest& m, const std::string& name) {
  for (const StageRecord& s : m.stages)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("sha256") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("no stages") {
    RunConfig c = parse_config("stages = none\n");
    c.out = oracle::tmp_dir("pipe-none");
    const RunManifest m = run_pipeline(c);
    CHECK(m.stages.empty());
    CHECK(m.exit_code() == 0);
    CHECK(fs::exists(c.out + "/manifest.json"));
  }

  TEST_CASE("full run on a small grid") {
    const RunConfig c = small(oracle::tmp_dir("pipe-a"));
    const RunManifest m = run_pipeline(c);
    for (const StageRecord& s : m.stages) {
      INFO(s.name << ": " << s.error);
      CHECK(s.status == "ok");
    }
    CHECK(m.stages.size() == pipeline_stages().size());
    CHECK(m.verdict == "1D");
    CHECK(m.exit_code() == 0);

    std::ifstream lam(c.out + "/lambda.csv");
    std::string header;
    std::getline(lam, header);
    CHECK(header == "R,lambda");
    int rows = 0;
    for (std::string l; std::getline(lam, l);) rows += !l.empty();
    CHECK(rows == 3);

    for (const Artifact& a : m.artifacts) {
      CHECK(fs::exists(c.out + "/" + a.path));
      CHECK(sha256_file(c.out + "/" + a.path) == a.sha256);
      CHECK(fs::file_size(c.out + "/" + a.path) == a.bytes);
    }
    CHECK(m.json.find("\"format\": \"nlab-manifest v1\"") != std::string::npos);
    CHECK(m.json == slurp(c.out + "/manifest.json"));

    // a second run elsewhere reproduces every file byte for byte
    const RunConfig c2 = small(oracle::tmp_dir("pipe-b"));
    run_pipeline(c2);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(c.out)) {
      const fs::path other = fs::path(c2.out) / e.path().filename();
      REQUIRE(fs::exists(other));
      CHECK(slurp(e.path()) == slurp(other));
      ++files;
    }
    CHECK(files == m.artifacts.size() + 1);
  }

  TEST_CASE("frozen unstable state") {
    RunConfig c = small(oracle::tmp_dir("pipe-frozen"));
    set_config_value(c, "frozen_u", "constant:0");
    set_config_value(c, "stages", "stability,sigma,verdict,probes");
    const RunManifest m = run_pipeline(c);
    REQUIRE(m.stages.size() == 5);
    CHECK(m.stages[0].name == "input");
    CHECK(m.stages[0].status == "frozen");
    const StageRecord* st = find(m, "stability");
    REQUIRE(st);
    CHECK(st->status == "failed");
    CHECK(st->error_kind == "stability-violation");
    for (const char* n : {"sigma", "verdict", "probes"}) CHECK(find(m, n)->status == "skipped");
    CHECK(m.negative);
    CHECK_FALSE(m.failed);
    CHECK(m.exit_code() == 2);
  }

  TEST_CASE("bad configurations and output directories") {
    RunConfig c = small(oracle::tmp_dir("pipe-bad"));
    c.radii = {4.0, 2.0};
    CHECK_THROWS_AS(run_pipeline(c), ConfigError);
    CHECK_FALSE(fs::exists(c.out + "/manifest.json"));

    RunConfig d = small("/proc/nlab-cannot-write");
    CHECK_THROWS_AS(run_pipeline(d), IoError);
    CHECK_THROWS_AS(ensure_writable_dir("/proc/nlab-cannot-write"), IoError);
  }

  TEST_CASE("csv writer") {
    const std::string dir = oracle::tmp_dir("pipe-csv");
    write_csv(dir + "/t.csv", "a,b", {{1.0, 0.1}, {-2.5, 1e-20}});
    CHECK(slurp(dir + "/t.csv") == "a,b\n1,0.1\n-2.5,1e-20\n");
  }
}
