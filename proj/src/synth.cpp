#include "mctsgen/synth.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mctsgen/errors.hpp"
#include "mctsgen/events.hpp"
#include "mctsgen/parallel.hpp"
#include "mctsgen/rng.hpp"
#include "mctsgen/segment.hpp"

namespace mctsgen {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const RewardRecord& r) {
  json j{{"question", r.question},
         {"answer_prefix", r.answer_prefix},
         {"completed_response", r.completed_response},
         {"likert", r.likert},
         {"source_run", r.source_run},
         {"record_index", r.record_index}};
  if (r.critique) j["critique"] = *r.critique;
  return j;
}

json to_json(const SwitchRecord& r) {
  json j{{"level", to_string(r.level)},
         {"question", r.question},
         {"prefix", r.prefix},
         {"label", r.label},
         {"source_run", r.source_run}};
  if (r.gamma_used) j["gamma_used"] = *r.gamma_used;
  return j;
}

std::vector<SearchTrace> load_traces(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  constexpr std::string_view kTreeSuffix = ".tree.json";
  std::vector<std::string> runs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with(kTreeSuffix)) {
      runs.push_back(name.substr(0, name.size() - kTreeSuffix.size()));
    }
  }
  std::sort(runs.begin(), runs.end());

  std::vector<SearchTrace> traces;
  for (const auto& run : runs) {
    SearchTrace t;
    t.run_id = run;
    std::ifstream in(dir / (run + std::string(kTreeSuffix)), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    t.document = deserialize_tree(buf.str());
    const auto events_path = dir / (run + ".events.jsonl");
    if (!fs::exists(events_path)) {
      throw ValidationError("trace " + run + " has no event log " + events_path.string());
    }
    t.events = read_jsonl(events_path);
    for (const auto& e : t.events) {
      if (e.value("event", "") == "start" && e.contains("reference") &&
          e["reference"].is_string()) {
        t.reference = e["reference"].get<std::string>();
      }
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

json RewardSynthStats::to_json() const {
  return {{"rollouts", rollouts},
          {"records", records},
          {"skipped",
           {{"scorer_failure", scorer_failures}, {"missing_reference", missing_reference}}}};
}

namespace {

struct PendingRollout {
  std::size_t trace = 0;
  std::uint64_t index = 0;
  std::string prefix;
  std::string response;
};

}  // namespace

std::vector<RewardRecord> collect_reward_data(const std::vector<SearchTrace>& traces,
                                              const RewardModel& scorer, bool with_reference,
                                              RewardMode mode, RewardSynthStats* stats,
                                              int jobs) {
  RewardSynthStats local;
  std::vector<PendingRollout> pending;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    std::uint64_t index = 0;
    std::size_t found = 0;
    for (const auto& e : traces[t].events) {
      if (e.value("event", "") != "iteration" || !e.contains("evaluations")) continue;
      for (const auto& ev : e["evaluations"]) {
        for (const auto& ro : ev.at("rollouts")) {
          pending.push_back({t, index++, ev.at("prefix").get<std::string>(),
                             ro.at("response").get<std::string>()});
          ++found;
        }
      }
    }
    local.rollouts += found;
    if (with_reference && !traces[t].reference) {
      spdlog::warn("trace {} has no reference answer; {} rollouts skipped", traces[t].run_id,
                   found);
      local.missing_reference += found;
      pending.resize(pending.size() - found);
    }
  }

  std::vector<std::optional<RewardRecord>> slots(pending.size());
  parallel_for(pending.size(), jobs, [&](std::size_t i) {
    const auto& p = pending[i];
    const auto& trace = traces[p.trace];
    RewardRequest req{trace.document.tree.question(), p.response,
                      with_reference ? trace.reference : std::nullopt, mode};
    try {
      const auto score = scorer.score(req);
      slots[i] = RewardRecord{req.question, p.prefix,      p.response,   score.likert,
                              score.critique, trace.run_id, p.index};
    } catch (const Error& e) {
      spdlog::warn("scoring {}#{} failed: {}", trace.run_id, p.index, e.what());
    }
  });

  std::vector<RewardRecord> out;
  for (auto& s : slots) {
    if (s) {
      out.push_back(std::move(*s));
    } else {
      ++local.scorer_failures;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const RewardRecord& a, const RewardRecord& b) {
    return std::tie(a.source_run, a.record_index) < std::tie(b.source_run, b.record_index);
  });
  local.records = out.size();
  if (stats) *stats = local;
  return out;
}

namespace {

std::set<std::string> tokens(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace

double token_jaccard(std::string_view a, std::string_view b) {
  return jaccard(tokens(a), tokens(b));
}

json BalanceStats::to_json() const {
  auto counts = [](const std::map<int, std::size_t>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = v;
    return j;
  };
  return {{"input", input},
          {"dedup_rejects", duplicates},
          {"downsampled", downsampled},
          {"per_class_after_dedup", counts(before)},
          {"per_class", counts(after)}};
}

std::vector<RewardRecord> dedup_and_balance(const std::vector<RewardRecord>& records,
                                            std::uint64_t seed, BalanceStats* stats) {
  BalanceStats local;
  local.input = records.size();

  std::vector<std::size_t> kept;
  std::map<std::string, std::vector<std::set<std::string>>> seen;  // question -> token sets
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto toks = tokens(records[i].completed_response);
    auto& prior = seen[records[i].question];
    const bool dup = std::any_of(prior.begin(), prior.end(), [&](const auto& p) {
      return jaccard(p, toks) >= kDuplicateJaccard;
    });
    if (dup) {
      ++local.duplicates;
      continue;
    }
    prior.push_back(std::move(toks));
    kept.push_back(i);
  }

  std::map<int, std::vector<std::size_t>> classes;
  for (auto i : kept) classes[records[i].likert].push_back(i);
  std::size_t target = SIZE_MAX;
  for (const auto& [likert, members] : classes) {
    local.before[likert] = members.size();
    target = std::min(target, members.size());
  }

  std::vector<std::size_t> selected;
  for (auto& [likert, members] : classes) {
    // Partial Fisher-Yates: the first `target` positions form the sample.
    rng::Stream stream(rng::mix({seed, static_cast<std::uint64_t>(likert)}));
    for (std::size_t j = 0; j < target && members.size() > target; ++j) {
      const auto pick = j + stream.below(members.size() - j);
      std::swap(members[j], members[pick]);
    }
    members.resize(target);
    local.after[likert] = target;
    selected.insert(selected.end(), members.begin(), members.end());
  }
  std::sort(selected.begin(), selected.end());
  local.downsampled = kept.size() - selected.size();

  std::vector<RewardRecord> out;
  out.reserve(selected.size());
  for (auto i : selected) out.push_back(records[i]);
  if (stats) *stats = local;
  return out;
}

std::vector<SwitchRecord> label_step_switch(const SearchTree& tree, double gamma,
                                            const std::string& source_run) {
  std::vector<SwitchRecord> out;
  for (const auto& n : tree.nodes()) {
    if (!n.evaluated()) continue;
    SwitchRecord r;
    r.level = SwitchLevel::step;
    r.question = tree.question();
    r.prefix = join_sentences(tree.prefix_of(n.id));
    r.label = value_to_likert_scale(n.value) > gamma ? 1 : 0;
    r.gamma_used = gamma;
    r.source_run = source_run;
    out.push_back(std::move(r));
  }
  return out;
}

json InstanceSynthStats::to_json() const {
  return {{"questions", questions}, {"labeled", labeled}, {"skipped", skipped}};
}

std::vector<SwitchRecord> label_instance_switch(const std::vector<QaItem>& items,
                                                const PolicyModel& policy, const Judge& judge,
                                                double temperature, InstanceSynthStats* stats) {
  InstanceSynthStats local;
  local.questions = items.size();
  std::vector<SwitchRecord> out;
  for (const auto& item : items) {
    try {
      PolicyRequest req;
      req.context.question = item.question;
      req.context.language_tag = item.language_tag;
      req.mode = PolicyMode::full_completion;
      req.temperature = temperature;
      const auto answer = policy.generate(req).front().text;
      const bool correct = judge.judge(item.question, item.reference_answer, answer);
      out.push_back({SwitchLevel::instance, item.question, "", correct ? 0 : 1, std::nullopt,
                     item.id});
      ++local.labeled;
    } catch (const Error& e) {
      spdlog::warn("instance label for {} skipped: {}", item.id, e.what());
      local.skipped[item.id] = e.what();
    }
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace mctsgen
