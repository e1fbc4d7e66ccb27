#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cpvar/cli.hpp"
#include "cpvar/estimators.hpp"
#include "cpvar/sim.hpp"
#include "support.hpp"

using namespace cpvar;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "cpvar");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code =
      cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cpvar_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void put(const fs::path& file, const std::string& text) {
  std::ofstream(file) << text;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Dataset A on disk.
fs::path write_dataset_a(const std::string& name) {
  const auto dir = scratch(name);
  put(dir / "subjects.csv", "id,followup,reason,z\n1,4,censoring,\n2,2,censoring,\n");
  put(dir / "events.csv", "id,time\n1,1\n2,2\n");
  return dir;
}

bool single_error_line(const std::string& err, int code) {
  const std::string head = "ERROR " + std::to_string(code) + ": ";
  return err.rfind(head, 0) == 0 && err.find('\n') == err.size() - 1;
}

}  // namespace

TEST_CASE("cli: estimate on dataset A") {
  const auto dir = write_dataset_a("est");
  const auto r = call({"estimate", "--design", "observed", "--subjects",
                       (dir / "subjects.csv").string(), "--events",
                       (dir / "events.csv").string(), "--horizon", "3", "--out",
                       (dir / "curve.csv").string()});
  REQUIRE(r.code == 0);
  const std::string curve = slurp(dir / "curve.csv");
  CHECK(curve.rfind("s,mu_hat,k_hat,var_hat,se_hat\n", 0) == 0);
  CHECK(curve.find("\n2,1,1,") != std::string::npos);
  CHECK(curve.find("\n1,0.5,1,") != std::string::npos);

  const auto p = call({"estimate", "--design", "observed", "--subjects",
                       (dir / "subjects.csv").string(), "--events",
                       (dir / "events.csv").string(), "--horizon", "3", "--out",
                       (dir / "curve.csv").string(), "--pseudo", "2",
                       "--pseudo-out", (dir / "pseudo.csv").string(),
                       "--dump-influence", (dir / "inf.csv").string()});
  REQUIRE(p.code == 0);
  CHECK(slurp(dir / "pseudo.csv") == "id,z,pseudo\n1,,1\n2,,1\n");
  CHECK(slurp(dir / "inf.csv").rfind("id,s,influence\n1,1,", 0) == 0);

  const auto bad = call({"estimate", "--design", "observed", "--subjects",
                         (dir / "subjects.csv").string(), "--events",
                         (dir / "events.csv").string(), "--horizon", "4.5",
                         "--out", (dir / "curve.csv").string()});
  CHECK(bad.code == 4);
  CHECK(single_error_line(bad.err, 4));
}

TEST_CASE("cli: input validation") {
  const auto dir = write_dataset_a("bad");
  put(dir / "late.csv", "id,time\n1,1\n2,2.5\n");
  const auto late = call({"estimate", "--design", "observed", "--subjects",
                          (dir / "subjects.csv").string(), "--events",
                          (dir / "late.csv").string(), "--horizon", "2", "--out",
                          (dir / "curve.csv").string()});
  CHECK(late.code == 3);
  CHECK(single_error_line(late.err, 3));

  const auto missing = call({"estimate", "--design", "observed", "--subjects",
                             (dir / "nope.csv").string(), "--events",
                             (dir / "events.csv").string(), "--horizon", "2",
                             "--out", (dir / "curve.csv").string()});
  CHECK(missing.code == 3);

  CHECK(call({"estimate", "--design", "weird", "--subjects",
              (dir / "subjects.csv").string(), "--events",
              (dir / "events.csv").string(), "--horizon", "2", "--out",
              (dir / "curve.csv").string()})
            .code == 2);
  const auto flag = call({"pvar", "--input", "x.csv", "--p", "1.5", "--bogus"});
  CHECK(flag.code == 2);
  CHECK(single_error_line(flag.err, 2));
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"study", "sideways", "--config", "c.json", "--out", "o"}).code == 2);

  put(dir / "cfg.json", R"({"lambda": 1, "colour": "red"})");
  const auto key = call({"simulate", "--config", (dir / "cfg.json").string(),
                         "--out", (dir / "sim").string()});
  CHECK(key.code == 3);
  CHECK(key.err.find("colour") != std::string::npos);
  put(dir / "cfg.json", "{not json");
  CHECK(call({"simulate", "--config", (dir / "cfg.json").string(), "--out",
              (dir / "sim").string()})
            .code == 3);
}

TEST_CASE("cli: pvar") {
  const auto dir = scratch("pvar");
  // nu-hat of dataset A: jumps of 1/2 at 1 and 2
  put(dir / "step.csv", "time,value\n0,0\n1,0.5\n2,1\n");
  const auto r = call({"pvar", "--input", (dir / "step.csv").string(), "--p",
                       "1.5", "--oracle"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("v_p = 1\n") != std::string::npos);
  CHECK(r.out.find("seminorm = 1\n") != std::string::npos);
  CHECK(r.out.find("sup = 1\n") != std::string::npos);
  CHECK(r.out.find("norm = 2\n") != std::string::npos);
  CHECK(r.out.find("partition = 0 2\n") != std::string::npos);
  CHECK(r.out.find("agrees") != std::string::npos);
  CHECK(call({"pvar", "--input", (dir / "step.csv").string(), "--p", "0.5"}).code ==
        2);
  put(dir / "bad.csv", "t,v\n0,0\n");
  CHECK(call({"pvar", "--input", (dir / "bad.csv").string(), "--p", "1.5"}).code ==
        3);
}

TEST_CASE("cli: step file round trip") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const StepFunction f = testing::random_step(rng, 10);
    std::stringstream buf;
    cli::write_step(f, buf);
    const StepFunction g = cli::read_step(buf);
    CHECK(g.initial_value() == f.initial_value());
    CHECK(std::equal(g.breakpoints().begin(), g.breakpoints().end(),
                     f.breakpoints().begin(), f.breakpoints().end()));
    CHECK(std::equal(g.levels().begin(), g.levels().end(), f.levels().begin(),
                     f.levels().end()));
  }
}

TEST_CASE("cli: config parsing") {
  const auto c = cli::parse_config(
      R"({"lambda": 2, "censor_rate": 0.5, "terminal_rate": 0.3, "tau": 4,
          "n": 50, "n_list": [10, 20], "B": 7, "p": 1.2, "t": 1.5,
          "design": "censored", "seed": 9, "z_prob": 0.4, "z_multiplier": 3,
          "n_max": 500, "window_start": 50})");
  CHECK(c.truth.event_rate == 2.0);
  CHECK(c.truth.censor_rate == 0.5);
  CHECK(c.truth.terminal_rate == 0.3);
  CHECK(c.truth.horizon == 4.0);
  CHECK(c.n == 50);
  CHECK(c.n_list == std::vector<std::size_t>{10, 20});
  CHECK(c.replications == 7u);
  CHECK(c.p == 1.2);
  CHECK(c.t == 1.5);
  CHECK(c.design == DesignKind::censored);
  CHECK(c.seed == 9u);
  REQUIRE(c.truth.covariate);
  CHECK(c.truth.covariate->z_prob == 0.4);
  CHECK(c.truth.covariate->multiplier == 3.0);
  CHECK(c.n_max == 500);
  CHECK(c.window_start == 50);
  CHECK_THROWS_AS(cli::parse_config(R"({"n": -1})"), FormatError);
  CHECK_THROWS_AS(cli::parse_config(R"({"design": 3})"), FormatError);
  CHECK_THROWS_AS(cli::parse_config("[1, 2]"), FormatError);
  CHECK_THROWS_AS(cli::parse_config(R"({"lambda": -1})"), InvalidArgument);
}

TEST_CASE("cli: simulate feeds estimate bit for bit") {
  const auto dir = scratch("sim");
  put(dir / "cfg.json", R"({"lambda": 1, "censor_rate": 0.5, "terminal_rate": 0.3,
                            "tau": 5, "n": 80, "design": "censored", "seed": 4})");
  REQUIRE(call({"simulate", "--config", (dir / "cfg.json").string(), "--out",
                (dir / "a").string()})
              .code == 0);
  for (const char* f : {"subjects.csv", "events.csv", "latent.csv",
                        "latent_events.csv"}) {
    CHECK(fs::is_regular_file(dir / "a" / f));
  }
  const Sample from_file = read_sample(dir / "a" / "subjects.csv",
                                       dir / "a" / "events.csv",
                                       DesignKind::censored);
  TruthSpec truth{1.0, 0.5, 0.3, 5.0, std::nullopt, std::nullopt};
  const Generated g = generate({truth, 80, 4, DesignKind::censored});
  REQUIRE(from_file == g.sample);
  const auto a = estimate(from_file, DesignKind::censored, 3.0);
  const auto b = estimate(g.sample, DesignKind::censored, 3.0);
  CHECK(a.mu_at_grid == b.mu_at_grid);
  CHECK(a.variance == b.variance);
  CHECK(a.influence == b.influence);

  // Same seed, same bytes; --seed overrides the config.
  REQUIRE(call({"simulate", "--config", (dir / "cfg.json").string(), "--out",
                (dir / "b").string()})
              .code == 0);
  REQUIRE(call({"simulate", "--config", (dir / "cfg.json").string(), "--out",
                (dir / "c").string(), "--seed", "5"})
              .code == 0);
  for (const char* f : {"subjects.csv", "events.csv", "latent.csv",
                        "latent_events.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(slurp(dir / "a" / "events.csv") != slurp(dir / "c" / "events.csv"));
}

TEST_CASE("cli: studies are reproducible") {
  const auto dir = scratch("study");
  put(dir / "rate.json", R"({"n_list": [10, 20, 40], "B": 6, "seed": 3})");
  put(dir / "cov.json", R"({"censor_rate": 0.5, "terminal_rate": 0.3, "n": 60,
                            "B": 20, "design": "censored", "seed": 3})");
  put(dir / "asb.json", R"({"cap": 3, "n_max": 300, "window_start": 30})");
  const std::vector<std::pair<std::string, std::string>> runs{
      {"convergence", "rate.json"},
      {"prop1", "rate.json"},
      {"coverage", "cov.json"},
      {"asbound", "asb.json"}};
  for (const auto& [kind, cfg] : runs) {
    CAPTURE(kind);
    const auto one = call({"study", kind, "--config", (dir / cfg).string(), "--out",
                           (dir / "x").string(), "--threads", "1"});
    REQUIRE(one.code == 0);
    const auto two = call({"study", kind, "--config", (dir / cfg).string(), "--out",
                           (dir / "y").string(), "--threads", "3"});
    REQUIRE(two.code == 0);
    CHECK(one.out == two.out);
    for (const auto& e : fs::directory_iterator(dir / "x")) {
      CHECK(slurp(e.path()) == slurp(dir / "y" / e.path().filename()));
    }
  }
  CHECK(fs::is_regular_file(dir / "x" / "convergence.csv"));
  CHECK(fs::is_regular_file(dir / "x" / "coverage_summary.csv"));

  put(dir / "uncapped.json", R"({"n_max": 300})");
  const auto r = call({"study", "asbound", "--config",
                       (dir / "uncapped.json").string(), "--out",
                       (dir / "z").string()});
  CHECK(r.code == 5);
  CHECK(single_error_line(r.err, 5));
}
