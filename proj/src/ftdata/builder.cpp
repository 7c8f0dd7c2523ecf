#include "sg/ftdata/builder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sg/common/errors.hpp"
#include "sg/common/rng.hpp"
#include "sg/interventions/pipeline.hpp"
#include "sg/scenario/render.hpp"

namespace sg::ftdata {

namespace {

using interventions::DecisionKind;
using interventions::FtVariant;
using scenario::ThreatKind;

/// Seeded selection of `keep` indices out of `size`, without replacement,
/// returned in ascending order so relative input order is preserved.
std::vector<std::size_t> pick_indices(std::size_t size, std::size_t keep, std::uint64_t seed) {
  std::vector<std::size_t> indices(size);
  std::iota(indices.begin(), indices.end(), 0);
  auto rng = seeded_rng(seed);
  for (std::size_t i = 0; i < keep && i + 1 < size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, size - 1);
    std::swap(indices[i], indices[pick(rng)]);
  }
  indices.resize(keep);
  std::sort(indices.begin(), indices.end());
  return indices;
}

EntryList trim_side(const EntryList& entries, bool give_in_side, std::size_t keep, std::uint64_t seed) {
  std::vector<std::size_t> side_positions;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].gives_in() == give_in_side) side_positions.push_back(i);
  }
  auto chosen = pick_indices(side_positions.size(), std::min(keep, side_positions.size()), seed);
  std::vector<bool> kept(entries.size(), false);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].gives_in() != give_in_side) kept[i] = true;
  }
  for (auto pos : chosen) kept[side_positions[pos]] = true;
  EntryList out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (kept[i]) out.push_back(entries[i]);
  }
  return out;
}

std::size_t count_give_in(const EntryList& entries) {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const PoolEntry& e) { return e.gives_in(); }));
}

}  // namespace

std::string to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::SelfModel: return "self_model";
    case SourceTag::StrongModel: return "strong_model";
    case SourceTag::StrongModelSgPrompted: return "strong_model_sg_prompted";
  }
  throw Error("unknown SourceTag");
}

SourceTag source_tag_from_string(const std::string& name) {
  if (name == "self_model") return SourceTag::SelfModel;
  if (name == "strong_model") return SourceTag::StrongModel;
  if (name == "strong_model_sg_prompted") return SourceTag::StrongModelSgPrompted;
  throw Error("unknown source tag: " + name);
}

const EntryList* ResponsePool::find(const std::string& scenario_id, ThreatKind kind) const {
  auto it = entries.find({scenario_id, kind});
  return it == entries.end() ? nullptr : &it->second;
}

long long round_half_even(double value) {
  const double floor_v = std::floor(value);
  const double frac = value - floor_v;
  const long long f = static_cast<long long>(floor_v);
  if (frac > 0.5) return f + 1;
  if (frac < 0.5) return f;
  return (f % 2 == 0) ? f : f + 1;
}

EntryList balance(const EntryList& entries, double target_p_give_in, std::uint64_t seed,
                  bool literal_formula) {
  if (entries.empty()) return {};
  if (target_p_give_in < 0.0 || target_p_give_in > 1.0) {
    throw Error("balance: target probability out of [0,1]");
  }
  const double n_g = static_cast<double>(count_give_in(entries));
  const double n_ng = static_cast<double>(entries.size()) - n_g;
  const double ratio = n_g / (n_g + n_ng);
  const double p_g = target_p_give_in;
  const double p_ng = 1.0 - p_g;

  if (ratio == p_g) return entries;

  if (ratio > p_g) {
    // Too many give-ins: keep every not-give-in, thin the give-ins down to
    // the count whose ratio against the kept side is closest to the target.
    const double raw = literal_formula ? p_g * n_g / p_ng : p_g * n_ng / p_ng;
    const auto keep = static_cast<std::size_t>(std::min<long long>(
        round_half_even(raw), static_cast<long long>(n_g)));
    return trim_side(entries, true, keep, seed);
  }
  // Too few give-ins: keep them all, thin the not-give-ins.
  const double raw = literal_formula ? p_ng * n_ng / p_g : p_ng * n_g / p_g;
  const auto keep = static_cast<std::size_t>(std::min<long long>(
      round_half_even(raw), static_cast<long long>(n_ng)));
  return trim_side(entries, false, keep, seed);
}

std::vector<EntryList> equalize_across_sources(const std::vector<EntryList>& pools, std::uint64_t seed) {
  if (pools.size() < 2) throw Error("equalize_across_sources requires at least two sources");
  std::size_t min_g = std::numeric_limits<std::size_t>::max();
  std::size_t min_ng = std::numeric_limits<std::size_t>::max();
  for (const auto& pool : pools) {
    const std::size_t g = count_give_in(pool);
    min_g = std::min(min_g, g);
    min_ng = std::min(min_ng, pool.size() - g);
  }
  std::vector<EntryList> out;
  out.reserve(pools.size());
  for (std::size_t i = 0; i < pools.size(); ++i) {
    EntryList trimmed = trim_side(pools[i], true, min_g, mix_seed(seed, i * 2 + 1));
    out.push_back(trim_side(trimmed, false, min_ng, mix_seed(seed, i * 2 + 2)));
  }
  return out;
}

EntryList filter_pointless(const EntryList& entries) {
  EntryList out;
  out.reserve(entries.size());
  for (const auto& entry : entries) {
    if (!entry.gives_in()) out.push_back(entry);
  }
  return out;
}

namespace {

struct RoleSources {
  // (pool source, the kind whose responses provide the targets) per variant.
  SourceTag tag;
  ThreatKind kind;
};

RoleSources source_for(FtVariant variant, ThreatKind input_kind) {
  switch (variant) {
    case FtVariant::A:
      return {SourceTag::SelfModel, input_kind == ThreatKind::Surrogate ? ThreatKind::Default : input_kind};
    case FtVariant::B:
    case FtVariant::D:
      return {SourceTag::StrongModel,
              input_kind == ThreatKind::Surrogate ? ThreatKind::Default : input_kind};
    case FtVariant::C:
      if (input_kind == ThreatKind::Surrogate) {
        return {SourceTag::StrongModelSgPrompted, ThreatKind::Surrogate};
      }
      return {SourceTag::StrongModel, input_kind};
  }
  throw Error("unknown FtVariant");
}

std::string compose_target(const PoolEntry& entry) {
  std::string target = entry.cot_text;
  if (!target.empty() && target.back() != '\n') target += '\n';
  target += interventions::decision_marker(entry.decision);
  return target;
}

}  // namespace

std::vector<FineTuneRecord> build_e2e_dataset(FtVariant variant, const scenario::Dataset& train,
                                              const std::vector<ResponsePool>& pools,
                                              const TargetDistribution& targets,
                                              const prompts::Library& prompts,
                                              const BuildOptions& options) {
  interventions::MethodSpec method;
  method.kind = interventions::MethodKind::FineTunedE2E;
  method.cot = true;
  method.ft_variant = variant;

  std::vector<const scenario::ThreatScenario*> ordered;
  for (const auto& s : train.scenarios) {
    if (variant == FtVariant::D && !s.has_tag("threat_execution_is_immoral")) continue;
    ordered.push_back(&s);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  const ThreatKind input_kinds[] = {ThreatKind::Surrogate, ThreatKind::Default, ThreatKind::Pointless};

  std::vector<FineTuneRecord> records;
  for (const auto* s : ordered) {
    auto target_it = targets.find(s->id);
    if (target_it == targets.end()) throw Error("no target distribution for scenario " + s->id);
    const double p_g = target_it->second;
    const auto params = scenario::default_params(*s);

    for (ThreatKind input_kind : input_kinds) {
      // Candidate sources for this role across all variants, so the second
      // trimming round makes the variants' data quantities comparable.
      std::vector<RoleSources> role_sources;
      std::vector<std::size_t> present;
      for (FtVariant v : {FtVariant::A, FtVariant::B, FtVariant::C}) {
        RoleSources rs = source_for(v, input_kind);
        bool known = std::any_of(role_sources.begin(), role_sources.end(), [&](const RoleSources& o) {
          return o.tag == rs.tag && o.kind == rs.kind;
        });
        if (!known) role_sources.push_back(rs);
      }

      const RoleSources own = source_for(variant, input_kind);
      std::vector<EntryList> prepared;
      std::size_t own_index = role_sources.size();
      std::vector<RoleSources> available;
      for (const auto& rs : role_sources) {
        const ResponsePool* pool = nullptr;
        for (const auto& p : pools) {
          if (p.source_tag == rs.tag) pool = &p;
        }
        if (pool == nullptr) continue;  // source not collected; skip from equalization
        const EntryList* entries = pool->find(s->id, rs.kind);
        if (entries == nullptr) continue;
        const std::uint64_t seed =
            mix_seed(options.seed, fnv1a(s->id), fnv1a(to_string(rs.tag) + scenario::to_string(rs.kind)));
        EntryList balanced = input_kind == ThreatKind::Pointless
                                 ? *entries
                                 : balance(*entries, p_g, seed, options.literal_balance_formula);
        if (rs.tag == own.tag && rs.kind == own.kind) own_index = prepared.size();
        available.push_back(rs);
        prepared.push_back(std::move(balanced));
      }
      if (own_index >= prepared.size()) {
        throw Error("missing response pool source " + to_string(own.tag) + " for scenario " + s->id);
      }
      if (prepared.size() >= 2) {
        prepared = equalize_across_sources(prepared, mix_seed(options.seed, fnv1a(s->id),
                                                              static_cast<std::uint64_t>(input_kind)));
      }
      EntryList chosen = std::move(prepared[own_index]);
      if (input_kind == ThreatKind::Pointless) chosen = filter_pointless(chosen);

      const std::string rendered = scenario::render(*s, input_kind, params);
      const backend::ChatRequest request =
          interventions::build_request(method, rendered, prompts, options.defaults);
      for (const auto& entry : chosen) {
        records.push_back({request.messages, compose_target(entry)});
      }
    }
  }
  return records;
}

std::vector<TranslationPair> build_translation_dataset(const scenario::Dataset& train,
                                                       const prompts::Library& prompts,
                                                       const interventions::RequestDefaults& defaults) {
  const auto& tpl = prompts.get(prompts::Library::kSgTranslation);
  const std::string system_text = tpl.instantiate({{"FEW_SHOT", ""}});

  std::vector<TranslationPair> pairs;
  pairs.reserve(train.scenarios.size());
  for (const auto& s : train.scenarios) {
    const auto params = scenario::default_params(s);
    TranslationPair pair;
    pair.scenario_id = s.id;
    pair.input_messages.push_back({backend::Role::System, system_text});
    pair.input_messages.push_back(
        {backend::Role::User, scenario::render(s, ThreatKind::Surrogate, params)});
    pair.target_text = scenario::render(s, ThreatKind::Default, params);
    pairs.push_back(std::move(pair));
  }
  (void)defaults;
  return pairs;
}

namespace {

nlohmann::json messages_to_json(const std::vector<backend::Message>& messages) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : messages) {
    arr.push_back({{"role", backend::to_string(m.role)}, {"content", m.content}});
  }
  return arr;
}

}  // namespace

void emit_jsonl(const std::vector<FineTuneRecord>& records, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  for (const auto& record : records) {
    nlohmann::json line = {{"messages", messages_to_json(record.input_messages)},
                           {"response", record.target_response}};
    out << line.dump() << '\n';
  }
  if (!out.good()) throw IoError("write failed: " + path.string());
}

std::vector<FineTuneRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::vector<FineTuneRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto doc = nlohmann::json::parse(line);
    FineTuneRecord record;
    for (const auto& m : doc.at("messages")) {
      record.input_messages.push_back({backend::role_from_string(m.at("role").get<std::string>()),
                                       m.at("content").get<std::string>()});
    }
    record.target_response = doc.at("response").get<std::string>();
    records.push_back(std::move(record));
  }
  return records;
}

void emit_translation_jsonl(const std::vector<TranslationPair>& pairs,
                            const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  for (const auto& pair : pairs) {
    nlohmann::json line = {{"scenario_id", pair.scenario_id},
                           {"messages", messages_to_json(pair.input_messages)},
                           {"response", pair.target_text}};
    out << line.dump() << '\n';
  }
  if (!out.good()) throw IoError("write failed: " + path.string());
}

nlohmann::json training_manifest(FtVariant variant, std::uint64_t split_seed,
                                 const std::vector<SourceTag>& source_tags, std::size_t record_count) {
  nlohmann::json tags = nlohmann::json::array();
  for (auto tag : source_tags) tags.push_back(to_string(tag));
  return nlohmann::json{
      {"variant", to_string(variant)},
      {"split_seed", split_seed},
      {"hyperparameters",
       {{"epochs", 1}, {"batch_size", 2}, {"learning_rate_multiplier", 2}}},
      {"source_tags", std::move(tags)},
      {"counts", {{"records", record_count}}},
  };
}

}  // namespace sg::ftdata
