#include <doctest.h>

#include <cmath>

#include "adaskip/error.hpp"
#include "adaskip/online.hpp"
#include "adaskip/tokenizer.hpp"
#include "fixtures.hpp"
#include "oracle/oracle.hpp"

using namespace adaskip;
using namespace adaskip::policy;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an adaskip::Error");
  return ErrorKind::Io;
}

SublayerIO ffn_io(std::size_t layer, std::size_t t, double sim, double scale = 1.0) {
  SublayerIO io;
  io.sublayer = {layer, SublayerKind::Ffn};
  io.phase = Phase::Decode;
  io.token_index = t;
  io.input = {1.0, 0.0};
  io.output = {scale * sim, scale * std::sqrt(1.0 - sim * sim)};
  return io;
}

SkipPlan plan_with(std::vector<std::pair<SublayerRef, double>> members) {
  SkipPlan p;
  for (const auto& [ref, sim] : members) p.skipped.push_back({ref, 1.0, sim});
  std::sort(p.skipped.begin(), p.skipped.end(),
            [](const PlanEntry& a, const PlanEntry& b) { return a.sublayer < b.sublayer; });
  p.m = p.skipped.size() / 2;
  return p;
}

}  // namespace

TEST_CASE("window means") {
  OnlineState s(1, 2);
  s.observe(ffn_io(0, 0, 1.0));
  CHECK(*s.mean_similarity(0) == 1.0);
  CHECK_FALSE(s.mean_similarity(1));

  OnlineState four(4, 1);
  for (std::size_t t = 0; t < 4; ++t) four.observe(ffn_io(0, t, t < 2 ? 0.9 : 1.0));
  CHECK(*four.mean_similarity(0) == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(four.count(0) == 4);
}

TEST_CASE("attention and prefill IO are ignored") {
  OnlineState s(2, 2);
  auto attn = ffn_io(0, 0, 0.5);
  attn.sublayer.kind = SublayerKind::Attention;
  s.observe(attn);
  auto pre = ffn_io(0, 0, 0.5);
  pre.phase = Phase::Prefill;
  s.observe(pre);
  CHECK(s.count(0) == 0);
  CHECK(kind_of([&] { s.observe(ffn_io(0, 2, 0.5)); }) == ErrorKind::ContractViolation);
  CHECK(kind_of([] { OnlineState(0, 2); }) == ErrorKind::Validation);
}

TEST_CASE("finalize adds FFNs strictly above beta") {
  const SkipPlan plan = plan_with({{{0, SublayerKind::Attention}, 0.95}});
  OnlineState s(2, 3);
  for (std::size_t t = 0; t < 2; ++t) {
    s.observe(ffn_io(0, t, 0.5));
    s.observe(ffn_io(1, t, 1.0, 0.8));
    s.observe(ffn_io(2, t, 0.7));
  }
  const auto& p = s.finalize(plan, 0.95);
  CHECK(s.extra() == SkipSet{{1, SublayerKind::Ffn}});
  CHECK(p == SkipSet{{0, SublayerKind::Attention}, {1, SublayerKind::Ffn}});
  CHECK(s.scales_p().at({1, SublayerKind::Ffn}) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(s.scales_p().at({0, SublayerKind::Attention}) == 1.0);
  CHECK(kind_of([&] { s.observe(ffn_io(0, 0, 0.5)); }) == ErrorKind::State);

  OnlineState none(1, 2);
  none.observe(ffn_io(0, 0, 0.5));
  none.observe(ffn_io(1, 0, 0.95));
  CHECK(none.finalize(plan, 0.95) == plan.skip_set());  // equal to beta is not above it
  CHECK(none.extra().empty());
}

TEST_CASE("premature finalization") {
  const SkipPlan plan = plan_with({{{1, SublayerKind::Ffn}, 0.9}});
  OnlineState s(3, 2);
  s.observe(ffn_io(0, 0, 0.5));
  s.observe(ffn_io(0, 1, 0.5));
  CHECK(kind_of([&] { s.finalize(plan, 0.9); }) == ErrorKind::PrematureFinalization);
  CHECK_FALSE(s.finalized());
  CHECK(s.extra().empty());
  s.observe(ffn_io(0, 2, 0.5));
  CHECK_NOTHROW(s.finalize(plan, 0.9));
}

TEST_CASE("finalize agrees with the threshold-filter oracle") {
  std::mt19937_64 rng(31);
  const std::vector<double> levels{0.5, 0.8, 0.9, 0.95, 1.0};
  for (int i = 0; i < 500; ++i) {
    const std::size_t M = 1 + rng() % 8;
    const std::size_t P = 1 + rng() % 5;
    std::vector<std::pair<SublayerRef, double>> members;
    for (const auto& ref : all_sublayers(M)) {
      if (rng() % 3 == 0) members.push_back({ref, levels[rng() % levels.size()]});
    }
    if (members.empty()) members.push_back({{0, SublayerKind::Attention}, 0.9});
    const auto plan = plan_with(members);
    const double beta = derive_beta(plan);

    OnlineState s(P, M);
    std::map<std::size_t, double> means;
    for (std::size_t l = 0; l < M; ++l) {
      if (plan.contains({l, SublayerKind::Ffn})) continue;
      double sum = 0;
      for (std::size_t t = 0; t < P; ++t) {
        const auto io = ffn_io(l, t, levels[rng() % levels.size()]);
        sum += oracle::oracle_cosine(io.input, io.output);
        s.observe(io);
      }
      means[l] = sum / static_cast<double>(P);
    }
    const auto& got = s.finalize(plan, beta);
    const auto want_extra = oracle::oracle_threshold_filter(means, plan.skip_set(), beta);
    CHECK(s.extra() == want_extra);
    SkipSet want = plan.skip_set();
    want.insert(want_extra.begin(), want_extra.end());
    CHECK(got == want);
    for (const auto& r : s.extra()) CHECK(r.kind == SublayerKind::Ffn);
    const auto base = plan.skip_set();
    CHECK(std::includes(got.begin(), got.end(), base.begin(), base.end()));
  }
}

TEST_CASE("adaptive schedule on the planted model") {
  const auto pm = fixtures::planted_model();
  const auto& c = pm.config;
  const SkipPlan plan = plan_with({{{2, SublayerKind::Attention}, 0.999999},
                                   {{6, SublayerKind::Attention}, 0.999999}});
  const std::size_t P = 3;
  const auto prompt = tokenizer::encode("the planted window");

  for (auto mode : {OnlineMode::PlannedWindow, OnlineMode::FullWindow}) {
    AdaptiveSchedule sched(plan, c.num_layers, mode, P);
    REQUIRE(sched.online_enabled());
    auto hook = sched.hook();
    model::GenerateOptions opts;
    opts.max_new_tokens = P + 4;
    const auto g = model::generate(pm.weights, c, prompt, opts, sched.resolver(), hook);
    CHECK(sched.state().finalized());
    CHECK(sched.state().extra() == SkipSet{{3, SublayerKind::Ffn}, {5, SublayerKind::Ffn}});
    const auto& steps = g.decode_executed;
    REQUIRE(steps.size() == P + 3);
    // Only attention is planned, so both window modes execute the same set.
    const std::size_t window_exec = 2 * c.num_layers - 2;
    for (std::size_t k = 0; k < P; ++k) CHECK(steps[k] == window_exec);
    for (std::size_t k = P; k < steps.size(); ++k) CHECK(steps[k] == 2 * c.num_layers - 4);
    CHECK(sched.active().size() == 4);
  }

  AdaptiveSchedule off(plan, c.num_layers, OnlineMode::Off, P);
  model::GenerateOptions opts;
  opts.max_new_tokens = P + 2;
  const auto g = model::generate(pm.weights, c, prompt, opts, off.resolver(), off.hook());
  for (auto n : g.decode_executed) CHECK(n == 2 * c.num_layers - 2);
  CHECK_FALSE(off.state().finalized());

  // Baselines carry no threshold: online is disabled.
  const auto early = baseline_plan(Strategy::EarlySkip, c.num_layers, 1);
  AdaptiveSchedule base(early, c.num_layers, OnlineMode::PlannedWindow, P);
  CHECK_FALSE(base.online_enabled());
}

TEST_CASE("full-window mode runs every FFN in the window") {
  const auto pm = fixtures::planted_model();
  const auto& c = pm.config;
  const SkipPlan plan = plan_with({{{2, SublayerKind::Attention}, 0.99}, {{3, SublayerKind::Ffn}, 0.99}});
  const auto prompt = tokenizer::encode("full window");
  for (auto mode : {OnlineMode::PlannedWindow, OnlineMode::FullWindow}) {
    AdaptiveSchedule sched(plan, c.num_layers, mode, 2);
    model::GenerateOptions opts;
    opts.max_new_tokens = 4;
    const auto g = model::generate(pm.weights, c, prompt, opts, sched.resolver(), sched.hook());
    const std::size_t want = mode == OnlineMode::FullWindow ? 2 * c.num_layers - 1 : 2 * c.num_layers - 2;
    CHECK(g.decode_executed[0] == want);
    CHECK(g.decode_executed[1] == want);
    CHECK(sched.state().finalized());
  }
}
