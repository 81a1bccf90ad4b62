#include "adaskip/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "adaskip/digest.hpp"
#include "adaskip/error.hpp"
#include "adaskip/fileio.hpp"
#include "adaskip/parallel.hpp"
#include "adaskip/tensor.hpp"
#include "adaskip/tokenizer.hpp"

namespace adaskip::profiler {

void SublayerStats::record(const SublayerIO& io) {
  if (io.sublayer != sublayer || io.phase != phase) {
    fail(ErrorKind::ContractViolation, "record: io for " + to_string(io.sublayer) + " (" +
                                           std::string(to_string(io.phase)) + ") fed to stats of " +
                                           to_string(sublayer));
  }
  const double sim = tensor::cosine_similarity(io.input, io.output);
  const double ratio = tensor::l2_norm(io.output) / tensor::l2_norm(io.input);
  sum_similarity += sim;
  sum_scale += ratio;
  ++token_count;
}

ProfileEntry finalize(const SublayerStats& stats) {
  if (stats.token_count == 0) {
    fail(ErrorKind::EmptyStats, "no records for sublayer " + to_string(stats.sublayer));
  }
  const double n = static_cast<double>(stats.token_count);
  return {stats.sublayer, stats.sum_similarity / n, stats.sum_scale / n, stats.token_count};
}

const ProfileEntry* SimilarityProfile::find(const SublayerRef& ref) const {
  // Linear: callers may hand in entries in any order.
  const auto it = std::find_if(entries.begin(), entries.end(),
                               [&](const ProfileEntry& e) { return e.sublayer == ref; });
  return it != entries.end() ? &*it : nullptr;
}

SimilarityProfile merge_profiles(const SimilarityProfile& a, const SimilarityProfile& b) {
  if (a.model_id != b.model_id) {
    fail(ErrorKind::Incompatible, "model ids differ: " + a.model_id + " vs " + b.model_id);
  }
  if (a.phase != b.phase) fail(ErrorKind::Incompatible, "profiles cover different phases");

  SimilarityProfile out;
  out.model_id = a.model_id;
  out.phase = a.phase;
  out.task_count = a.task_count + b.task_count;
  out.task_ids = a.task_ids;
  out.task_ids.insert(out.task_ids.end(), b.task_ids.begin(), b.task_ids.end());
  std::sort(out.task_ids.begin(), out.task_ids.end());

  if (a.entries.empty() || b.entries.empty()) {
    out.entries = a.entries.empty() ? b.entries : a.entries;
    return out;
  }
  if (a.entries.size() != b.entries.size()) {
    fail(ErrorKind::Incompatible, "profiles cover different sublayer sets");
  }
  out.entries.reserve(a.entries.size());
  for (const auto& x : a.entries) {
    const auto* match = b.find(x.sublayer);
    if (!match) fail(ErrorKind::Incompatible, "profiles cover different sublayer sets");
    const auto& y = *match;
    const double nx = static_cast<double>(x.token_count);
    const double ny = static_cast<double>(y.token_count);
    const double n = nx + ny;
    out.entries.push_back({x.sublayer, (x.mean_similarity * nx + y.mean_similarity * ny) / n,
                           (x.mean_scale * nx + y.mean_scale * ny) / n,
                           x.token_count + y.token_count});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const ProfileEntry& l, const ProfileEntry& r) { return l.sublayer < r.sublayer; });
  return out;
}

ProfileAccumulator::ProfileAccumulator(std::size_t num_layers) {
  for (const auto& ref : all_sublayers(num_layers)) {
    prefill_.push_back({ref, Phase::Prefill});
    decode_.push_back({ref, Phase::Decode});
  }
}

void ProfileAccumulator::set_phase_enabled(Phase phase, bool enabled) {
  (phase == Phase::Prefill ? prefill_on_ : decode_on_) = enabled;
}

void ProfileAccumulator::record(const SublayerIO& io) {
  auto& table = io.phase == Phase::Prefill ? prefill_ : decode_;
  const bool on = io.phase == Phase::Prefill ? prefill_on_ : decode_on_;
  if (!on) return;
  if (io.sublayer.index() >= table.size()) {
    fail(ErrorKind::ContractViolation, "record: sublayer " + to_string(io.sublayer) + " out of range");
  }
  table[io.sublayer.index()].record(io);
}

const SublayerStats& ProfileAccumulator::stats(Phase phase, const SublayerRef& ref) const {
  return (phase == Phase::Prefill ? prefill_ : decode_).at(ref.index());
}

SimilarityProfile ProfileAccumulator::finalize(const std::string& model_id, Phase phase,
                                               std::vector<std::string> task_ids) const {
  SimilarityProfile p;
  p.model_id = model_id;
  p.phase = phase;
  p.task_count = task_ids.size();
  std::sort(task_ids.begin(), task_ids.end());
  p.task_ids = std::move(task_ids);
  for (const auto& s : phase == Phase::Prefill ? prefill_ : decode_) {
    if (s.token_count > 0) p.entries.push_back(profiler::finalize(s));
  }
  return p;
}

PhaseSelector parse_phase_selector(std::string_view text) {
  if (text == "prefill") return PhaseSelector::Prefill;
  if (text == "decode") return PhaseSelector::Decode;
  if (text == "both") return PhaseSelector::Both;
  fail(ErrorKind::Parse, "unknown phase selector '" + std::string(text) + "'");
}

ProfileSet profile_task(const model::Weights& weights, const model::ModelConfig& config,
                        const Task& task, PhaseSelector phases, std::size_t decode_len) {
  const bool want_prefill = phases != PhaseSelector::Decode;
  const bool want_decode = phases != PhaseSelector::Prefill;
  ProfileAccumulator acc(config.num_layers);
  acc.set_phase_enabled(Phase::Prefill, want_prefill);
  acc.set_phase_enabled(Phase::Decode, want_decode);

  const auto tokens = tokenizer::encode(task.prompt);
  model::GenerateOptions opts;
  opts.max_new_tokens = want_decode ? decode_len + 1 : 0;
  model::generate(weights, config, tokens, opts, {}, [&](const SublayerIO& io) { acc.record(io); });

  const std::string id = model::model_id(weights);
  ProfileSet out;
  if (want_prefill) out.prefill = acc.finalize(id, Phase::Prefill, {task.id});
  if (want_decode) out.decode = acc.finalize(id, Phase::Decode, {task.id});
  return out;
}

ProfileSet profile_tasks(const model::Weights& weights, const model::ModelConfig& config,
                         std::span<const Task> tasks, PhaseSelector phases, std::size_t decode_len) {
  if (tasks.empty()) fail(ErrorKind::Validation, "profile_tasks: no tasks");
  std::vector<ProfileSet> per_task(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    try {
      per_task[i] = profile_task(weights, config, tasks[i], phases, decode_len);
    } catch (const Error& e) {
      throw Error(e.kind(), "task " + tasks[i].id + ": " + e.what());
    }
  });
  ProfileSet out = std::move(per_task[0]);
  for (std::size_t i = 1; i < per_task.size(); ++i) {
    if (out.prefill) out.prefill = merge_profiles(*out.prefill, *per_task[i].prefill);
    if (out.decode) out.decode = merge_profiles(*out.decode, *per_task[i].decode);
  }
  return out;
}

nlohmann::json to_json(const SimilarityProfile& p) {
  std::vector<ProfileEntry> sorted = p.entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const ProfileEntry& a, const ProfileEntry& b) { return a.sublayer < b.sublayer; });
  std::vector<std::string> ids = p.task_ids;
  std::sort(ids.begin(), ids.end());
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& e : sorted) {
    subs.push_back({{"layer", e.sublayer.layer},
                    {"kind", to_string(e.sublayer.kind)},
                    {"mean_similarity", e.mean_similarity},
                    {"mean_scale", e.mean_scale},
                    {"token_count", e.token_count}});
  }
  return {{"model_id", p.model_id},
          {"phase", to_string(p.phase)},
          {"task_count", p.task_count},
          {"task_ids", ids},
          {"sublayers", subs}};
}

SimilarityProfile profile_from_json(const nlohmann::json& j) {
  SimilarityProfile p;
  try {
    p.model_id = j.at("model_id").get<std::string>();
    p.phase = parse_phase(j.at("phase").get<std::string>());
    p.task_count = j.at("task_count").get<std::size_t>();
    if (j.contains("task_ids")) p.task_ids = j.at("task_ids").get<std::vector<std::string>>();
    for (const auto& s : j.at("sublayers")) {
      ProfileEntry e;
      e.sublayer = {s.at("layer").get<std::size_t>(), parse_kind(s.at("kind").get<std::string>())};
      e.mean_similarity = s.at("mean_similarity").get<double>();
      e.mean_scale = s.at("mean_scale").get<double>();
      e.token_count = s.at("token_count").get<std::size_t>();
      if (!(e.mean_similarity >= -1.0 && e.mean_similarity <= 1.0) || !(e.mean_scale > 0.0) ||
          !std::isfinite(e.mean_scale) || e.token_count == 0) {
        fail(ErrorKind::Validation, "profile: out-of-range entry for " + to_string(e.sublayer));
      }
      p.entries.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("profile: ") + e.what());
  }
  std::sort(p.entries.begin(), p.entries.end(),
            [](const ProfileEntry& a, const ProfileEntry& b) { return a.sublayer < b.sublayer; });
  for (std::size_t i = 1; i < p.entries.size(); ++i) {
    if (p.entries[i].sublayer == p.entries[i - 1].sublayer) {
      fail(ErrorKind::Validation, "profile: duplicate entry for " + to_string(p.entries[i].sublayer));
    }
  }
  std::sort(p.task_ids.begin(), p.task_ids.end());
  return p;
}

std::string serialize(const SimilarityProfile& profile) { return to_json(profile).dump(); }

std::string digest(const SimilarityProfile& profile) { return sha256_hex(serialize(profile)); }

void save_profile(const std::filesystem::path& path, const SimilarityProfile& profile) {
  write_file_atomic(path, to_json(profile).dump(2) + "\n");
}

SimilarityProfile load_profile(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return profile_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace adaskip::profiler
