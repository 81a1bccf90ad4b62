#include <doctest.h>

#include <cmath>

#include "adaskip/error.hpp"
#include "adaskip/fileio.hpp"
#include "adaskip/profiler.hpp"
#include "adaskip/tokenizer.hpp"
#include "fixtures.hpp"
#include "oracle/oracle.hpp"

using namespace adaskip;
using namespace adaskip::profiler;
using tensor::Vector;

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

// An input/output pair with the requested cosine and norm ratio (d = 2).
SublayerIO pair_with(SublayerRef ref, double sim, double scale) {
  SublayerIO io;
  io.sublayer = ref;
  io.phase = Phase::Prefill;
  io.input = {1.0, 0.0};
  io.output = {scale * sim, scale * std::sqrt(1.0 - sim * sim)};
  return io;
}

SimilarityProfile one_entry(double sim, std::size_t count, double scale = 1.0) {
  SimilarityProfile p;
  p.model_id = "m";
  p.task_count = 1;
  p.entries.push_back({{0, SublayerKind::Ffn}, sim, scale, count});
  return p;
}

}  // namespace

TEST_CASE("record and finalize") {
  const SublayerRef ref{0, SublayerKind::Ffn};
  SublayerStats s{ref, Phase::Prefill};
  CHECK(kind_of([&] { finalize(s); }) == ErrorKind::EmptyStats);

  s.record(pair_with(ref, 0.97, 1.02));
  auto e = finalize(s);
  CHECK(e.mean_similarity == doctest::Approx(0.97).epsilon(1e-12));
  CHECK(e.mean_scale == doctest::Approx(1.02).epsilon(1e-12));
  CHECK(e.token_count == 1);

  SublayerStats t{ref, Phase::Prefill};
  t.record(pair_with(ref, 0.9, 1.0));
  t.record(pair_with(ref, 0.8, 1.0));
  e = finalize(t);
  CHECK(e.mean_similarity == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(e.token_count == 2);

  SublayerIO zero = pair_with(ref, 0.9, 1.0);
  zero.input = {0.0, 0.0};
  CHECK(kind_of([&] { t.record(zero); }) == ErrorKind::DegenerateInput);
  CHECK(t.token_count == 2);

  SublayerIO other = pair_with({1, SublayerKind::Ffn}, 0.9, 1.0);
  CHECK(kind_of([&] { t.record(other); }) == ErrorKind::ContractViolation);
}

TEST_CASE("merge is token weighted") {
  const auto m = merge_profiles(one_entry(0.9, 10), one_entry(0.8, 30));
  REQUIRE(m.entries.size() == 1);
  CHECK(m.entries[0].mean_similarity == doctest::Approx(0.825).epsilon(1e-12));
  CHECK(m.entries[0].token_count == 40);
  CHECK(m.task_count == 2);
}

TEST_CASE("merge identity, commutativity and mismatches") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    auto a = fixtures::random_profile(4, rng);
    auto b = fixtures::random_profile(4, rng);
    b.model_id = a.model_id;
    SimilarityProfile empty;
    empty.model_id = a.model_id;
    CHECK(merge_profiles(a, empty) == a);
    CHECK(merge_profiles(empty, a) == a);
    const auto ab = merge_profiles(a, b);
    const auto ba = merge_profiles(b, a);
    for (std::size_t k = 0; k < ab.entries.size(); ++k) {
      CHECK(std::abs(ab.entries[k].mean_similarity - ba.entries[k].mean_similarity) <= 1e-12);
      CHECK(std::abs(ab.entries[k].mean_scale - ba.entries[k].mean_scale) <= 1e-12);
      CHECK(ab.entries[k].token_count == ba.entries[k].token_count);
    }
  }
  auto a = one_entry(0.9, 10);
  auto b = one_entry(0.8, 30);
  b.model_id = "other";
  CHECK(kind_of([&] { merge_profiles(a, b); }) == ErrorKind::Incompatible);
  b = one_entry(0.8, 30);
  b.phase = Phase::Decode;
  CHECK(kind_of([&] { merge_profiles(a, b); }) == ErrorKind::Incompatible);
  b = one_entry(0.8, 30);
  b.entries[0].sublayer = {1, SublayerKind::Ffn};
  CHECK(kind_of([&] { merge_profiles(a, b); }) == ErrorKind::Incompatible);
}

TEST_CASE("pooled per-task profiles equal the oracle over concatenated traces") {
  const auto c = fixtures::desk_config();
  const auto w = model::init_model(c, 21);
  const auto tasks = fixtures::random_tasks("t", 5, 3, 20, 8, 99);
  const std::size_t decode_len = 6;

  oracle::RawTrace trace;
  for (const auto& t : tasks) {
    model::GenerateOptions opts;
    opts.max_new_tokens = decode_len + 1;
    model::generate(w, c, tokenizer::encode(t.prompt), opts, {},
                    [&](const SublayerIO& io) { trace.push_back(io); });
  }
  const auto set = profile_tasks(w, c, tasks, PhaseSelector::Both, decode_len);
  REQUIRE(set.prefill);
  REQUIRE(set.decode);
  for (const auto& [phase, profile] :
       {std::pair{Phase::Prefill, *set.prefill}, std::pair{Phase::Decode, *set.decode}}) {
    const auto want = oracle::oracle_similarity_means(trace, phase);
    REQUIRE(want.size() == profile.entries.size());
    CHECK(profile.task_count == tasks.size());
    for (const auto& e : profile.entries) {
      const auto& o = want.at(e.sublayer);
      CHECK(std::abs(e.mean_similarity - o.similarity) <= 1e-12);
      CHECK(std::abs(e.mean_scale - o.scale) <= 1e-12);
      CHECK(e.token_count == o.count);
      CHECK(e.mean_similarity >= -1.0);
      CHECK(e.mean_similarity <= 1.0);
      CHECK(e.mean_scale > 0.0);
    }
  }
  // Decode token counts: decode_len steps per task.
  CHECK(set.decode->entries[0].token_count == decode_len * tasks.size());
}

TEST_CASE("profiling does not change the logits") {
  const auto c = fixtures::desk_config();
  const auto w = model::init_model(c, 22);
  const auto prompt = tokenizer::encode("observer only");
  model::GenerateOptions opts;
  opts.max_new_tokens = 5;
  opts.keep_logits = true;
  const auto plain = model::generate(w, c, prompt, opts);
  ProfileAccumulator acc(c.num_layers);
  const auto hooked =
      model::generate(w, c, prompt, opts, {}, [&](const SublayerIO& io) { acc.record(io); });
  CHECK(plain.logits == hooked.logits);
  CHECK(plain.tokens == hooked.tokens);
}

TEST_CASE("a zeroed FFN profiles as (1, 1) exactly") {
  const auto pm = fixtures::planted_model();
  const auto tasks = fixtures::random_tasks("z", 3, 4, 12, 4, 5);
  const auto set = profile_tasks(pm.weights, pm.config, tasks, PhaseSelector::Prefill);
  REQUIRE(set.prefill);
  CHECK_FALSE(set.decode);
  for (const auto& ref : pm.zeroed_ffn) {
    const auto* e = set.prefill->find(ref);
    REQUIRE(e);
    CHECK(e->mean_similarity == 1.0);
    CHECK(e->mean_scale == 1.0);
  }
  CHECK(set.prefill->model_id == model::model_id(pm.weights));
  CHECK(set.prefill->task_ids.size() == 3);
}

TEST_CASE("profile serialisation round trip and validation") {
  fixtures::TempDir dir;
  std::mt19937_64 rng(6);
  auto p = fixtures::random_profile(8, rng);
  p.task_ids = {"a", "b"};
  save_profile(dir / "p.json", p);
  const auto back = load_profile(dir / "p.json");
  CHECK(back == p);
  CHECK(digest(back) == digest(p));
  save_profile(dir / "q.json", back);
  CHECK(read_file(dir / "p.json") == read_file(dir / "q.json"));

  auto j = to_json(p);
  j["sublayers"][0]["mean_similarity"] = 1.5;
  CHECK(kind_of([&] { profile_from_json(j); }) == ErrorKind::Validation);
  j = to_json(p);
  j["sublayers"][1] = j["sublayers"][0];
  CHECK(kind_of([&] { profile_from_json(j); }) == ErrorKind::Validation);
  j = to_json(p);
  j.erase("phase");
  CHECK(kind_of([&] { profile_from_json(j); }) == ErrorKind::Parse);

  write_file_atomic(dir / "bad.json", "{not json");
  CHECK(kind_of([&] { load_profile(dir / "bad.json"); }) == ErrorKind::Parse);
}
