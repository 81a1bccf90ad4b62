#include <doctest.h>

#include <fstream>
#include <sstream>

#include "adaskip/bench/cli.hpp"
#include "adaskip/bench/report.hpp"
#include "adaskip/fileio.hpp"
#include "adaskip/policy.hpp"
#include "adaskip/profiler.hpp"
#include "fixtures.hpp"

using namespace adaskip;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = bench::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write_tasks(const std::filesystem::path& path, const std::vector<Task>& tasks) {
  std::string text;
  for (const auto& t : tasks) {
    text += nlohmann::json{{"id", t.id}, {"prompt", t.prompt}, {"max_new_tokens", t.max_new_tokens}}.dump() + "\n";
  }
  write_file_atomic(path, text);
}

}  // namespace

TEST_CASE("end-to-end pipeline through the CLI") {
  fixtures::TempDir dir;
  const auto cfg = (dir / "config.json").string();
  write_file_atomic(cfg, nlohmann::json(fixtures::desk_config()).dump());
  write_tasks(dir / "calib.jsonl", fixtures::random_tasks("c", 3, 6, 16, 6, 1));
  write_tasks(dir / "eval.jsonl", fixtures::random_tasks("e", 2, 6, 16, 6, 2));
  const auto model = (dir / "m.adsk").string();

  auto r = cli({"gen-model", "--config", cfg, "--seed", "7", "--plant-identity", "3:ffn,5:ffn,2:attn:1e-6,6:attn:1e-6",
                "--out", model});
  REQUIRE(r.code == 0);
  CHECK(model::load_weights(model, fixtures::desk_config()) == fixtures::planted_model().weights);

  const auto prof = (dir / "p.json").string();
  r = cli({"profile", "--model", model, "--config", cfg, "--tasks", (dir / "calib.jsonl").string(), "--phase",
           "both", "--decode-len", "4", "--out", prof});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "p.decode.json"));
  CHECK(profiler::load_profile(dir / "p.decode.json").phase == Phase::Decode);

  const auto plan = (dir / "plan.json").string();
  r = cli({"plan", "--profile", prof, "--target-sublayers", "4", "--out", plan});
  REQUIRE(r.code == 0);
  CHECK(policy::load_plan(plan).skip_set() == fixtures::planted_model().planted());

  r = cli({"plan", "--profile", prof, "--alpha", "1.33", "--out", (dir / "alpha.json").string()});
  CHECK(r.code == 0);
  CHECK(policy::load_plan(dir / "alpha.json").m == 2);

  r = cli({"run", "--model", model, "--config", cfg, "--plan", plan, "--tasks", (dir / "eval.jsonl").string(),
           "--online-window", "3", "--no-timing", "--out", (dir / "run.csv").string()});
  REQUIRE(r.code == 0);
  const std::string csv = read_file(dir / "run.csv");
  CHECK(csv.rfind("strategy,target_2m,task_id,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  r = cli({"compare", "--model", model, "--config", cfg, "--profile", prof, "--tasks",
           (dir / "eval.jsonl").string(), "--targets", "4", "--strategies", "all", "--no-timing", "--out",
           (dir / "cmp").string()});
  REQUIRE(r.code == 0);
  const auto report = bench::load_report(dir / "cmp" / "compare.json");
  CHECK(report.rows.size() == 2 * 5);
  CHECK(std::filesystem::exists(dir / "cmp" / "compare.csv"));

  r = cli({"hit-rate", "--src-profile", prof, "--dest-profile", prof, "--k", "2,4", "--kind", "both"});
  CHECK(r.code == 0);
  CHECK(r.out.find("k=4 hits=4.00/4 rate=1.000000") != std::string::npos);

  // Calibration tasks reused for evaluation are a validation error.
  r = cli({"compare", "--model", model, "--config", cfg, "--profile", prof, "--tasks",
           (dir / "calib.jsonl").string(), "--targets", "4", "--no-timing", "--out", (dir / "bad").string()});
  CHECK(r.code == 2);
}

TEST_CASE("exit codes") {
  fixtures::TempDir dir;
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"plan", "--profile", "x.json"}).code == 2);  // missing --out
  CHECK(cli({"--help"}).code == 0);

  // Missing input file: runtime error.
  auto r = cli({"plan", "--profile", (dir / "missing.json").string(), "--alpha", "1.5", "--out",
                (dir / "o.json").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("missing.json") != std::string::npos);

  std::mt19937_64 rng(1);
  profiler::save_profile(dir / "p.json", fixtures::random_profile(4, rng));
  r = cli({"plan", "--profile", (dir / "p.json").string(), "--alpha", "0.5", "--out", (dir / "o.json").string()});
  CHECK(r.code == 2);
  r = cli({"plan", "--profile", (dir / "p.json").string(), "--alpha", "1.5", "--target-sublayers", "2", "--out",
           (dir / "o.json").string()});
  CHECK(r.code == 2);
  r = cli({"plan", "--profile", (dir / "p.json").string(), "--target-sublayers", "2", "--strategy", "periodic",
           "--out", (dir / "o.json").string()});
  CHECK(r.code == 0);
  CHECK(policy::load_plan(dir / "o.json").strategy == policy::Strategy::Periodic);
}
