#include "mctsgen/harness.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <map>
#include <memory>

#include "mctsgen/errors.hpp"
#include "mctsgen/events.hpp"
#include "mctsgen/parallel.hpp"
#include "mctsgen/segment.hpp"
#include "mctsgen/sim_clock.hpp"
#include "mctsgen/tree_io.hpp"

namespace mctsgen {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::direct: return "direct";
    case Method::cot: return "cot";
    case Method::self_consistency: return "self_consistency";
    case Method::best_of_n: return "best_of_n";
    case Method::mcts: return "mcts";
  }
  return "direct";
}

Method method_from_string(std::string_view s) {
  for (auto m : all_methods()) {
    if (to_string(m) == s) return m;
  }
  if (s == "sc") return Method::self_consistency;
  if (s == "bon") return Method::best_of_n;
  throw ValidationError("unknown method: " + std::string(s));
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::direct, Method::cot, Method::self_consistency,
                                           Method::best_of_n, Method::mcts};
  return methods;
}

namespace {

PolicyRequest completion_request(const QaItem& item, std::string question, double temperature,
                                 int offset) {
  PolicyRequest req;
  req.context.question = std::move(question);
  req.context.language_tag = item.language_tag;
  req.mode = PolicyMode::full_completion;
  req.samples = 1;
  req.temperature = temperature;
  req.sample_offset = offset;
  return req;
}

}  // namespace

std::string run_direct(const QaItem& item, const PolicyModel& policy, double temperature) {
  return policy.generate(completion_request(item, item.question, temperature, 0)).front().text;
}

std::string run_cot(const QaItem& item, const PolicyModel& policy, double temperature) {
  const auto question = item.question + " " + std::string(kCotSuffix);
  const auto text =
      policy.generate(completion_request(item, question, temperature, 0)).front().text;
  return final_sentence(text);
}

SampledAnswer run_self_consistency(const QaItem& item, const PolicyModel& policy, int n,
                                   double temperature) {
  if (n < 1) throw ValidationError("self-consistency needs n >= 1");
  struct Vote {
    std::size_t first;
    int count;
  };
  std::vector<std::string> answers;
  std::map<std::string, Vote> votes;
  for (int i = 0; i < n; ++i) {
    try {
      auto text =
          policy.generate(completion_request(item, item.question, temperature, i)).front().text;
      const auto key = normalize_answer(final_sentence(text));
      auto [it, fresh] = votes.try_emplace(key, Vote{answers.size(), 0});
      ++it->second.count;
      answers.push_back(std::move(text));
    } catch (const BackendError& e) {
      spdlog::warn("{}: sample {} dropped: {}", item.id, i, e.what());
    }
  }
  if (answers.empty()) throw BackendError("every self-consistency sample failed");
  const Vote* best = nullptr;
  for (const auto& [key, v] : votes) {
    if (!best || v.count > best->count || (v.count == best->count && v.first < best->first)) {
      best = &v;
    }
  }
  return {answers[best->first], static_cast<int>(answers.size())};
}

SampledAnswer run_best_of_n(const QaItem& item, const PolicyModel& policy,
                            const RewardModel& reward, int n, double temperature) {
  if (n < 1) throw ValidationError("best-of-n needs n >= 1");
  std::optional<std::string> best;
  double best_value = -1.0;
  int effective = 0;
  for (int i = 0; i < n; ++i) {
    try {
      auto text =
          policy.generate(completion_request(item, item.question, temperature, i)).front().text;
      const auto score = reward.score({item.question, text, std::nullopt, RewardMode::generative});
      ++effective;
      if (score.mapped_value > best_value) {
        best_value = score.mapped_value;
        best = std::move(text);
      }
    } catch (const BackendError& e) {
      spdlog::warn("{}: sample {} dropped: {}", item.id, i, e.what());
    } catch (const ScoringError& e) {
      spdlog::warn("{}: sample {} unscored: {}", item.id, i, e.what());
    }
  }
  if (!best) throw BackendError("every best-of-n sample failed");
  return {*best, effective};
}

void EvalReport::aggregate() {
  errors = 0;
  if (per_item.empty()) {
    accuracy.reset();
    mean_time = 0.0;
    mean_slow_step_ratio.reset();
    return;
  }
  double correct = 0.0;
  double time = 0.0;
  double ratio = 0.0;
  std::size_t ratios = 0;
  for (const auto& r : per_item) {
    correct += r.correct ? 1.0 : 0.0;
    time += r.wall_time;
    if (r.error) ++errors;
    if (r.slow_step_ratio) {
      ratio += *r.slow_step_ratio;
      ++ratios;
    }
  }
  const auto n = static_cast<double>(per_item.size());
  accuracy = correct / n;
  mean_time = time / n;
  if (ratios > 0) {
    mean_slow_step_ratio = ratio / static_cast<double>(ratios);
  } else {
    mean_slow_step_ratio.reset();
  }
}

json EvalReport::to_json() const {
  json items = json::array();
  for (const auto& r : per_item) {
    json j{{"id", r.id},
           {"correct", r.correct},
           {"wall_time", round_sig9(r.wall_time)},
           {"answer", r.answer}};
    if (r.slow_step_ratio) j["slow_step_ratio"] = round_sig9(*r.slow_step_ratio);
    if (r.n_effective) j["n_effective"] = *r.n_effective;
    if (r.error) j["error"] = *r.error;
    items.push_back(std::move(j));
  }
  json j{{"method", to_string(method)},
         {"items", per_item.size()},
         {"per_item", std::move(items)},
         {"mean_time", round_sig9(mean_time)},
         {"errors", errors},
         {"empty", empty()},
         {"settings", settings}};
  j["accuracy"] = accuracy ? json(round_sig9(*accuracy)) : json(nullptr);
  if (mean_slow_step_ratio) j["mean_slow_step_ratio"] = round_sig9(*mean_slow_step_ratio);
  return j;
}

EvalReport evaluate_method(const std::vector<QaItem>& dataset, Method method,
                           const SearchConfig& config, const Backends& backends,
                           const EvalOptions& options) {
  if (!backends.policy || !backends.judge) throw ValidationError("policy and judge are required");
  if ((method == Method::best_of_n || method == Method::mcts) && !backends.reward) {
    throw ValidationError(std::string(to_string(method)) + " needs a reward model");
  }
  if (method == Method::mcts && !backends.switch_model) {
    throw ValidationError("mcts needs a switch model");
  }
  if (options.trace_dir) fs::create_directories(*options.trace_dir);

  EvalReport report;
  report.method = method;
  report.settings = {{"temperature", round_sig9(config.temperature)},
                     {"virtual_time", options.virtual_time}};
  if (method == Method::self_consistency || method == Method::best_of_n) {
    report.settings["samples"] = options.samples;
  }
  if (method == Method::mcts) report.settings["search"] = config_to_json(config);
  report.per_item.resize(dataset.size());

  parallel_for(dataset.size(), options.jobs, [&](std::size_t i) {
    const auto& item = dataset[i];
    auto& row = report.per_item[i];
    row.id = item.id;
    Stopwatch watch(options.virtual_time);
    try {
      switch (method) {
        case Method::direct:
          row.answer = run_direct(item, *backends.policy, config.temperature);
          break;
        case Method::cot:
          row.answer = run_cot(item, *backends.policy, config.temperature);
          break;
        case Method::self_consistency: {
          auto r = run_self_consistency(item, *backends.policy, options.samples,
                                        config.temperature);
          row.answer = std::move(r.answer);
          row.n_effective = r.n_effective;
          break;
        }
        case Method::best_of_n: {
          auto r = run_best_of_n(item, *backends.policy, *backends.reward, options.samples,
                                 config.temperature);
          row.answer = std::move(r.answer);
          row.n_effective = r.n_effective;
          break;
        }
        case Method::mcts: {
          SearchOptions so;
          so.reward_mode = options.reward_mode;
          so.language_tag = item.language_tag;
          so.virtual_time = options.virtual_time;
          so.reference_answer = item.reference_answer;
          std::unique_ptr<JsonlEventWriter> events;
          if (options.trace_dir) {
            events = std::make_unique<JsonlEventWriter>(*options.trace_dir /
                                                        (item.id + ".events.jsonl"));
            so.events = events.get();
            so.recovery_path = *options.trace_dir / (item.id + ".partial.tree.json");
          }
          auto result = run_search(item.question, config, *backends.policy, *backends.reward,
                                   *backends.switch_model, so);
          if (options.trace_dir) {
            std::ofstream out(*options.trace_dir / (item.id + ".tree.json"), std::ios::binary);
            out << serialize_tree(result.document(config));
          }
          row.answer = std::move(result.answer);
          row.slow_step_ratio = result.slow_step_ratio;
          break;
        }
      }
      row.wall_time = watch.elapsed();
      row.correct = backends.judge->judge(item.question, item.reference_answer, row.answer);
    } catch (const Error& e) {
      row.wall_time = watch.elapsed();
      row.correct = false;
      row.error = e.what();
      spdlog::warn("{} failed on {}: {}", to_string(method), item.id, e.what());
    }
  });
  report.aggregate();
  return report;
}

json comparison_json(const std::vector<EvalReport>& reports,
                     const std::vector<std::string>& labels) {
  json rows = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    json row{{"label", i < labels.size() ? labels[i] : std::string(to_string(r.method))},
             {"method", to_string(r.method)},
             {"items", r.per_item.size()},
             {"mean_time", round_sig9(r.mean_time)},
             {"errors", r.errors}};
    row["accuracy"] = r.accuracy ? json(round_sig9(*r.accuracy)) : json(nullptr);
    row["slow_step_ratio"] =
        r.mean_slow_step_ratio ? json(round_sig9(*r.mean_slow_step_ratio)) : json(nullptr);
    rows.push_back(std::move(row));
  }
  return {{"rows", std::move(rows)}};
}

std::string comparison_table(const std::vector<EvalReport>& reports,
                             const std::vector<std::string>& labels) {
  std::string out = fmt::format("{:<24} {:>6} {:>9} {:>11} {:>10} {:>6}\n", "run", "items",
                                "accuracy", "mean_time_s", "slow_ratio", "errors");
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const auto label = i < labels.size() ? labels[i] : std::string(to_string(r.method));
    out += fmt::format("{:<24} {:>6} {:>9} {:>11.3f} {:>10} {:>6}\n", label, r.per_item.size(),
                       r.accuracy ? fmt::format("{:.4f}", *r.accuracy) : "n/a", r.mean_time,
                       r.mean_slow_step_ratio ? fmt::format("{:.4f}", *r.mean_slow_step_ratio)
                                              : "-",
                       r.errors);
  }
  return out;
}

}  // namespace mctsgen
