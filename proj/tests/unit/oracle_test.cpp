#include <doctest.h>

#include <algorithm>

#include "adaskip/runtime.hpp"
#include "adaskip/error.hpp"
#include "fixtures.hpp"
#include "oracle/oracle.hpp"

using namespace adaskip;
using namespace adaskip::oracle;

TEST_CASE("oracle_topk") {
  std::mt19937_64 rng(1);
  auto p = fixtures::random_profile(4, rng);
  const auto all = oracle_topk(p, 8, std::nullopt);
  CHECK(all.size() == 8);
  p.entries[5].mean_similarity = 2.0;
  CHECK(oracle_topk(p, 1, std::nullopt) == std::set<SublayerRef>{p.entries[5].sublayer});
  CHECK_THROWS_AS(oracle_topk(p, 9, std::nullopt), Error);

  // Ties go to the lower sublayer.
  for (auto& e : p.entries) e.mean_similarity = 0.5;
  CHECK(oracle_topk(p, 3, std::nullopt) ==
        std::set<SublayerRef>{{0, SublayerKind::Attention}, {0, SublayerKind::Ffn}, {1, SublayerKind::Attention}});
}

TEST_CASE("oracle_similarity_means is order independent") {
  const auto c = fixtures::desk_config();
  const auto w = model::init_model(c, 2);
  const std::vector<tokenizer::Token> one{tokenizer::kBos};
  const auto r = model::prefill(w, c, one, {}, {}, {}, true);
  const auto means = oracle_similarity_means(r.trace, Phase::Prefill);
  CHECK(means.size() == 2 * c.num_layers);
  for (const auto& io : r.trace) {
    CHECK(means.at(io.sublayer).similarity == oracle_cosine(io.input, io.output));
    CHECK(means.at(io.sublayer).count == 1);
  }
  CHECK(oracle_similarity_means(r.trace, Phase::Decode).empty());

  const std::vector<tokenizer::Token> many{tokenizer::kBos, 'a', 'b', 'c', 'd'};
  auto trace = model::prefill(w, c, many, {}, {}, {}, true).trace;
  const auto before = oracle_similarity_means(trace, Phase::Prefill);
  std::mt19937_64 rng(3);
  std::shuffle(trace.begin(), trace.end(), rng);
  const auto after = oracle_similarity_means(trace, Phase::Prefill);
  for (const auto& [ref, m] : before) {
    CHECK(std::abs(after.at(ref).similarity - m.similarity) <= 1e-15);
    CHECK(std::abs(after.at(ref).scale - m.scale) <= 1e-15);
  }
}

TEST_CASE("oracle_attention examples") {
  std::mt19937_64 rng(4);
  const auto q = fixtures::random_vector(8, rng);
  const auto k = fixtures::random_vector(8, rng);
  const auto v = fixtures::random_vector(8, rng);
  const auto one = oracle_attention(q, k, v, 2);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(one[i] - v[i]) < 1e-15);

  std::vector<double> kk(k), vv(v);
  kk.insert(kk.end(), k.begin(), k.end());
  vv.insert(vv.end(), v.begin(), v.end());
  const auto two = oracle_attention(q, kk, vv, 2);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(two[i] - v[i]) < 1e-15);

  const auto q8 = fixtures::random_vector(16, rng);
  const auto k8 = fixtures::random_vector(8 * 16, rng);
  const auto v8 = fixtures::random_vector(8 * 16, rng);
  const auto want = oracle_attention(q8, k8, v8, 4);
  const auto got = model::attend(q8, k8, v8, 8, 4);
  for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(want[i] - got[i]) < 1e-6);
}

TEST_CASE("small oracles") {
  const std::vector<double> v{0.97, 0.95, 0.96};
  CHECK(oracle_min(v) == 0.95);
  CHECK(oracle_cosine(std::vector<double>{3, 4}, std::vector<double>{4, 3}) == doctest::Approx(0.96));
  CHECK(oracle_hit_rate({{0, SublayerKind::Ffn}, {1, SublayerKind::Ffn}},
                        {{1, SublayerKind::Ffn}, {2, SublayerKind::Ffn}}, 2) == 0.5);
  const std::map<std::size_t, double> means{{0, 0.5}, {1, 0.96}, {2, 0.95}};
  CHECK(oracle_threshold_filter(means, {{1, SublayerKind::Ffn}}, 0.95).empty());
  CHECK(oracle_threshold_filter(means, {}, 0.95) == std::set<SublayerRef>{{1, SublayerKind::Ffn}});
  const auto prod = oracle::naive_matmul(std::vector<double>{1, 2, 3, 4}, std::vector<double>{5, 6, 7, 8}, 2, 2, 2);
  CHECK(prod == std::vector<double>{19, 22, 43, 50});
}
