#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "mctsgen/dataset.hpp"
#include "mctsgen/dot.hpp"
#include "mctsgen/engine.hpp"
#include "mctsgen/errors.hpp"
#include "mctsgen/harness.hpp"
#include "mctsgen/http.hpp"
#include "mctsgen/judge.hpp"
#include "mctsgen/parallel.hpp"
#include "mctsgen/segment.hpp"
#include "mctsgen/synth.hpp"
#include "mctsgen/world.hpp"

namespace mctsgen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Raised for problems with the invocation itself (exit 2).
struct UsageError : Error {
  using Error::Error;
};

struct Settings {
  // shared
  std::string config_file;
  std::string log_level = "warn";
  std::string backend = "sim";
  std::string world_file;
  int jobs = 1;
  bool critique = false;
  std::optional<double> instance_gamma;
  SearchConfig search;

  // http
  HttpBackendConfig http;
  std::string reward_model;
  std::string switch_model;
  std::string judge_model;

  // search
  std::string question;
  std::string input_file;
  std::string trace_dir;

  // eval
  std::string dataset_file;
  std::string method = "all";
  int samples = 20;
  std::string sweep_file;
  std::string out_dir;

  // synth
  std::string traces_dir;
  std::string synth_mode = "reward";
  std::string level = "step";
  bool with_reference = false;
  bool no_balance = false;

  // worldgen
  WorldSpec world;
  std::string world_out;
  std::string dataset_out;

  // inspect
  std::string tree_file;
  std::string dot_file;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << bytes;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Config file: "key = value" lines, '#' comments, mandatory "version = 1".

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::map<std::string, std::string> values;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(fmt::format("{}:{}: expected key = value", path.string(), lineno));
    }
    std::string key(trim(body.substr(0, eq)));
    std::string value(trim(body.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    values[key] = value;
  }
  const auto version = values.find("version");
  if (version == values.end()) throw UsageError(path.string() + ": missing version field");
  if (version->second != "1") {
    throw UsageError(path.string() + ": unsupported config version " + version->second);
  }
  values.erase(version);
  return values;
}

std::optional<std::string> prescan(const std::vector<std::string>& args, std::string_view flag) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with(std::string(flag) + "=")) return args[i].substr(flag.size() + 1);
  }
  return std::nullopt;
}

/// Config values become option defaults, so anything given on the command
/// line (or through the environment, applied after parsing) wins.
void apply_config(CLI::App& app, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const auto name = "--" + key;
    bool known = false;
    if (auto* opt = app.get_option_no_throw(name)) {
      opt->default_val(value);
      known = true;
    }
    for (auto* sub : app.get_subcommands({})) {
      if (auto* opt = sub->get_option_no_throw(name)) {
        opt->default_val(value);
        known = true;
      }
    }
    if (!known) throw UsageError("unknown config key: " + key);
  }
}

void apply_env(CLI::App& app, Settings& s) {
  if (app.count("--base-url") == 0) {
    if (const char* v = std::getenv("MCTSGEN_BASE_URL"); v && *v) s.http.base_url = v;
  }
  if (app.count("--api-key") == 0) {
    if (const char* v = std::getenv("MCTSGEN_API_KEY"); v && *v) s.http.api_key = v;
  }
}

// ---------------------------------------------------------------------------
// Backends

struct Stack {
  std::unique_ptr<FactWorld> world;  // heap-held: the models keep references to it
  std::unique_ptr<PolicyModel> policy;
  std::unique_ptr<RewardModel> reward;
  std::unique_ptr<Judge> judge;
  std::function<std::unique_ptr<SwitchModel>(double gamma)> make_switch;
  bool virtual_time = false;
};

HttpBackendConfig role_config(const Settings& s, const std::string& model) {
  auto c = s.http;
  if (!model.empty()) c.model_name = model;
  return c;
}

Stack build_stack(const Settings& s) {
  Stack stack;
  if (s.backend == "sim") {
    if (s.world_file.empty()) throw UsageError("--backend sim requires --world");
    try {
      stack.world = std::make_unique<FactWorld>(FactWorld::load(s.world_file));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("invalid world file " + s.world_file + ": " + e.what());
    }
    const auto& world = *stack.world;
    stack.policy = std::make_unique<WorldPolicy>(world, s.search.seed);
    stack.reward = std::make_unique<WorldReward>(world);
    stack.judge = std::make_unique<WorldJudge>(world);
    const auto instance_gamma = s.instance_gamma;
    stack.make_switch = [&world, instance_gamma](double gamma) -> std::unique_ptr<SwitchModel> {
      return std::make_unique<HeuristicSwitch>(world_risk_estimator(world), gamma,
                                               instance_gamma);
    };
    stack.virtual_time = true;
    return stack;
  }
  if (s.backend != "http") throw UsageError("unknown backend: " + s.backend);
  if (s.http.model_name.empty()) throw UsageError("--backend http requires --model");
  const auto policy_cfg = role_config(s, "");
  try {
    policy_cfg.validate();
  } catch (const ConfigurationError& e) {
    throw UsageError(e.what());
  }
  spdlog::info("http backend: {}", policy_cfg.redacted().dump());
  stack.policy = std::make_unique<ChatPolicy>(make_http_chat(policy_cfg));
  stack.reward = std::make_unique<ChatRewardModel>(make_http_chat(role_config(s, s.reward_model)));
  stack.judge = std::make_unique<ChatJudge>(make_http_chat(role_config(s, s.judge_model)));
  if (!s.switch_model.empty()) {
    auto chat = make_http_chat(role_config(s, s.switch_model));
    stack.make_switch = [chat](double) -> std::unique_ptr<SwitchModel> {
      return std::make_unique<ChatSwitchModel>(chat);
    };
  } else {
    spdlog::info("no --switch-model; every decision is slow");
    stack.make_switch = [](double) -> std::unique_ptr<SwitchModel> {
      return std::make_unique<FixedSwitch>(ThinkingMode::slow);
    };
  }
  return stack;
}

RewardMode reward_mode(const Settings& s) {
  return s.critique ? RewardMode::critique : RewardMode::generative;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_search(const Settings& s, std::ostream& out) {
  if (s.question.empty() == s.input_file.empty()) {
    throw UsageError("search needs exactly one of a question argument or --input");
  }
  s.search.validate();
  std::vector<QaItem> items;
  if (!s.input_file.empty()) {
    items = load_dataset(s.input_file);
  } else {
    items.push_back({"search-0000", s.question, "", "en"});
  }
  auto stack = build_stack(s);
  if (stack.world) {
    for (auto& item : items) {
      const auto qi = stack.world->question_index(item.question);
      if (item.reference_answer.empty()) item.reference_answer = stack.world->questions()[qi].answer;
    }
  }
  const auto switch_model = stack.make_switch(s.search.gamma);
  if (!s.trace_dir.empty()) fs::create_directories(s.trace_dir);

  std::vector<SearchResult> results(items.size());
  parallel_for(items.size(), s.jobs, [&](std::size_t i) {
    const auto& item = items[i];
    SearchOptions so;
    so.reward_mode = reward_mode(s);
    so.language_tag = item.language_tag;
    so.virtual_time = stack.virtual_time;
    if (!item.reference_answer.empty()) so.reference_answer = item.reference_answer;
    std::unique_ptr<JsonlEventWriter> events;
    const fs::path trace(s.trace_dir);
    if (!s.trace_dir.empty()) {
      events = std::make_unique<JsonlEventWriter>(trace / (item.id + ".events.jsonl"));
      so.events = events.get();
      so.recovery_path = trace / (item.id + ".partial.tree.json");
    }
    results[i] = run_search(item.question, s.search, *stack.policy, *stack.reward, *switch_model,
                            so);
    if (!s.trace_dir.empty()) {
      write_file(trace / (item.id + ".tree.json"), serialize_tree(results[i].document(s.search)));
    }
  });

  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items.size() == 1) {
      out << results[i].answer << "\n";
    } else {
      out << items[i].id << "\t" << results[i].answer << "\n";
    }
  }
  return kExitOk;
}

std::vector<double> read_sweep(const fs::path& path) {
  std::vector<double> gammas;
  std::istringstream in(read_file(path));
  std::string tok;
  while (in >> tok) {
    if (tok.starts_with("#")) {
      std::getline(in, tok);
      continue;
    }
    for (auto& c : tok) {
      if (c == ',') c = ' ';
    }
    std::istringstream parts(tok);
    std::string part;
    while (parts >> part) {
      try {
        std::size_t used = 0;
        gammas.push_back(std::stod(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw UsageError("bad gamma value in " + path.string() + ": " + part);
      }
    }
  }
  if (gammas.empty()) throw UsageError("sweep file has no gamma values: " + path.string());
  return gammas;
}

int cmd_eval(const Settings& s, std::ostream& out) {
  if (s.out_dir.empty()) throw UsageError("eval requires --out");
  s.search.validate();
  if (s.samples < 1) throw UsageError("--samples must be >= 1");
  std::vector<Method> methods;
  if (s.method == "all") {
    methods = all_methods();
  } else {
    try {
      methods.push_back(method_from_string(s.method));
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
  }
  std::vector<double> gammas;
  if (!s.sweep_file.empty()) gammas = read_sweep(s.sweep_file);
  const auto dataset = load_dataset(s.dataset_file);
  auto stack = build_stack(s);
  const fs::path out_dir(s.out_dir);
  fs::create_directories(out_dir);

  std::vector<EvalReport> reports;
  std::vector<std::string> labels;
  auto run_one = [&](Method m, const SearchConfig& config, const std::string& label) {
    EvalOptions eo;
    eo.samples = s.samples;
    eo.jobs = s.jobs;
    eo.virtual_time = stack.virtual_time;
    eo.reward_mode = reward_mode(s);
    if (!s.trace_dir.empty() && m == Method::mcts) eo.trace_dir = fs::path(s.trace_dir) / label;
    const auto switch_model = stack.make_switch(config.gamma);
    const Backends b{stack.policy.get(), stack.reward.get(), switch_model.get(),
                     stack.judge.get()};
    auto report = evaluate_method(dataset, m, config, b, eo);
    if (report.empty()) spdlog::warn("dataset {} is empty; accuracy undefined", s.dataset_file);
    auto j = report.to_json();
    j["dataset"] = s.dataset_file;
    j["label"] = label;
    write_file(out_dir / (label + ".report.json"), dump(j));
    reports.push_back(std::move(report));
    labels.push_back(label);
  };

  for (auto m : methods) {
    if (m == Method::mcts && !gammas.empty()) {
      for (double g : gammas) {
        auto config = s.search;
        config.gamma = g;
        run_one(m, config, fmt::format("mcts.gamma-{:g}", g));
      }
    } else {
      run_one(m, s.search, std::string(to_string(m)));
    }
  }
  const auto table = comparison_table(reports, labels);
  write_file(out_dir / "comparison.txt", table);
  write_file(out_dir / "comparison.json", dump(comparison_json(reports, labels)));
  out << table;
  return kExitOk;
}

std::vector<json> rows_of(const auto& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  return rows;
}

int cmd_synth(const Settings& s, std::ostream& out) {
  if (s.out_dir.empty()) throw UsageError("synth requires --out");
  const fs::path out_dir(s.out_dir);

  if (s.synth_mode == "switch" && s.level == "instance") {
    if (s.dataset_file.empty()) throw UsageError("instance labels require --dataset");
    const auto items = load_dataset(s.dataset_file);
    auto stack = build_stack(s);
    InstanceSynthStats stats;
    const auto records =
        label_instance_switch(items, *stack.policy, *stack.judge, s.search.temperature, &stats);
    fs::create_directories(out_dir);
    write_jsonl(out_dir / "switch_instance.jsonl", rows_of(records));
    write_file(out_dir / "switch_instance.stats.json", dump(stats.to_json()));
    out << fmt::format("{} instance records ({} skipped)\n", records.size(),
                       stats.skipped.size());
    return kExitOk;
  }

  if (s.traces_dir.empty()) throw UsageError("synth requires --traces");
  if (s.synth_mode != "reward" && s.synth_mode != "switch") {
    throw UsageError("unknown synth mode: " + s.synth_mode);
  }
  if (s.synth_mode == "switch" && s.level != "step") {
    throw UsageError("unknown switch level: " + s.level);
  }
  const auto traces = load_traces(s.traces_dir);
  if (traces.empty()) spdlog::warn("no traces found in {}", s.traces_dir);

  if (s.synth_mode == "switch") {
    std::vector<SwitchRecord> records;
    std::map<std::string, std::size_t> per_label{{"0", 0}, {"1", 0}};
    for (const auto& t : traces) {
      for (auto& r : label_step_switch(t.document.tree, s.search.gamma, t.run_id)) {
        ++per_label[std::to_string(r.label)];
        records.push_back(std::move(r));
      }
    }
    fs::create_directories(out_dir);
    write_jsonl(out_dir / "switch_step.jsonl", rows_of(records));
    write_file(out_dir / "switch_step.stats.json",
               dump({{"traces", traces.size()},
                     {"records", records.size()},
                     {"gamma", s.search.gamma},
                     {"per_label", per_label}}));
    out << fmt::format("{} step records from {} traces\n", records.size(), traces.size());
    return kExitOk;
  }

  std::optional<Stack> stack;
  if (!traces.empty()) stack = build_stack(s);
  RewardSynthStats collect_stats;
  std::vector<RewardRecord> raw;
  if (stack) {
    raw = collect_reward_data(traces, *stack->reward, s.with_reference, reward_mode(s),
                              &collect_stats, s.jobs);
  }
  BalanceStats balance_stats;
  const auto kept = s.no_balance ? raw : dedup_and_balance(raw, s.search.seed, &balance_stats);
  const std::string stem = s.critique ? "reward_critique" : "reward_generative";
  fs::create_directories(out_dir);
  write_jsonl(out_dir / (stem + ".raw.jsonl"), rows_of(raw));
  write_jsonl(out_dir / (stem + ".jsonl"), rows_of(kept));
  json stats{{"traces", traces.size()},
             {"with_reference", s.with_reference},
             {"mode", s.critique ? "critique" : "generative"},
             {"collect", collect_stats.to_json()},
             {"records", kept.size()}};
  if (!s.no_balance) stats["balance"] = balance_stats.to_json();
  write_file(out_dir / (stem + ".stats.json"), dump(stats));
  out << fmt::format("{} reward records ({} before dedup/balance) from {} traces\n", kept.size(),
                     raw.size(), traces.size());
  return kExitOk;
}

int cmd_worldgen(const Settings& s, std::ostream& out) {
  if (s.world_out.empty()) throw UsageError("worldgen requires --out");
  auto spec = s.world;
  spec.seed = s.search.seed;
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  const auto world = FactWorld::generate(spec);
  write_file(s.world_out, world.serialize());
  if (!s.dataset_out.empty()) {
    std::vector<QaItem> items;
    for (const auto& q : world.questions()) {
      items.push_back({q.id, q.question, q.answer, q.language_tag});
    }
    if (fs::path(s.dataset_out).has_parent_path()) {
      fs::create_directories(fs::path(s.dataset_out).parent_path());
    }
    save_dataset(s.dataset_out, items);
  }
  out << fmt::format("wrote {} questions to {}\n", world.questions().size(), s.world_out);
  return kExitOk;
}

int cmd_inspect(const Settings& s, std::ostream& out, std::ostream& err) {
  TreeDocument doc;
  try {
    doc = deserialize_tree(read_file(s.tree_file));
  } catch (const Error& e) {
    err << "error: cannot parse " << s.tree_file << ": " << e.what() << "\n";
    return kExitParse;
  }
  const auto& tree = doc.tree;
  const auto path = extract_best_path(tree);
  out << "nodes: " << tree.size() << "\n";
  out << "depth: " << tree.height() << "\n";
  out << "termination: " << to_string(doc.reason.kind) << " after "
      << doc.reason.iterations_used << " iterations\n";
  out << "best path (" << path.size() << " nodes):\n";
  for (auto id : path) {
    const auto& n = tree.node(id);
    out << fmt::format("  [{}] n={} v={:.4f}{} {}\n", id, n.visit_count, n.value,
                       n.terminal ? " terminal" : "", n.sentence.text);
  }
  out << "answer: " << path_answer(tree, path) << "\n";
  if (!s.dot_file.empty()) write_file(s.dot_file, tree_to_dot(tree));
  return kExitOk;
}

void setup_logging(const std::string& level, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("mctsgen", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(logger);
}

// Restores the caller's logger; ours writes to a stream that may not outlive run().
struct LoggerGuard {
  std::shared_ptr<spdlog::logger> previous = spdlog::default_logger();
  ~LoggerGuard() { spdlog::set_default_logger(previous); }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const LoggerGuard guard;
  Settings s;
  CLI::App app{"Sentence-level MCTS generation with fast/slow switching", "mctsgen"};
  app.set_help_all_flag("--help-all", "Print help for every subcommand and exit");
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  // Shared options.
  app.add_option("--config", s.config_file, "Key = value config file (needs 'version = 1')");
  app.add_option("--log-level", s.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  app.add_option("--backend", s.backend, "Model backend")->check(CLI::IsMember({"sim", "http"}));
  app.add_option("--world", s.world_file, "World file for the sim backend");
  app.add_option("--seed", s.search.seed, "Run seed");
  app.add_option("--jobs", s.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--critique", s.critique, "Use critique-based reward prompts");
  app.add_option("--k,--expansions", s.search.expansions, "Children expanded per slow step");
  app.add_option("--m,--rollouts", s.search.rollouts, "Rollouts per evaluated child");
  app.add_option("--iterations,--max-iterations", s.search.max_iterations,
                 "Maximum search iterations");
  app.add_option("--uct-weight", s.search.uct_weight, "UCT exploration weight");
  app.add_option("--reward-threshold", s.search.reward_threshold,
                 "Stop once a terminal child reaches this value");
  app.add_option("--gamma", s.search.gamma, "Step switch threshold on the 1-5 scale");
  app.add_option("--instance-gamma", s.instance_gamma,
                 "Instance switch threshold for the sim backend (default: always slow)");
  app.add_option("--temperature", s.search.temperature, "Policy sampling temperature");

  // HTTP backend.
  app.add_option("--base-url", s.http.base_url, "Chat-completions base URL (env MCTSGEN_BASE_URL)");
  app.add_option("--api-key", s.http.api_key, "API key (env MCTSGEN_API_KEY)")
      ->default_str("");
  app.add_option("--model", s.http.model_name, "Policy model name");
  app.add_option("--reward-model", s.reward_model, "Reward model name (default: --model)");
  app.add_option("--switch-model", s.switch_model, "Switch model name (default: always slow)");
  app.add_option("--judge-model", s.judge_model, "Judge model name (default: --model)");
  app.add_option("--timeout", s.http.timeout_seconds, "Request timeout in seconds");
  app.add_option("--max-retries", s.http.max_retries, "Retries for 429/5xx/timeouts");

  auto* search = app.add_subcommand("search", "Answer questions with tree search");
  search->add_option("question", s.question, "Question text");
  search->add_option("--input", s.input_file, "Dataset file (one JSON item per line)");
  search->add_option("--trace", s.trace_dir, "Write <id>.tree.json and <id>.events.jsonl here");

  auto* eval = app.add_subcommand("eval", "Evaluate methods on a dataset");
  eval->add_option("--dataset", s.dataset_file, "Dataset file")->required();
  eval->add_option("--method", s.method,
                   "direct, cot, self_consistency, best_of_n, mcts or all");
  eval->add_option("--samples", s.samples, "Samples for self-consistency and best-of-n");
  eval->add_option("--sweep", s.sweep_file, "File of gamma values; one mcts report per value");
  eval->add_option("--out", s.out_dir, "Report directory");
  eval->add_option("--trace", s.trace_dir, "Trace directory for mcts runs");

  auto* synth = app.add_subcommand("synth", "Build reward and switch training data");
  synth->add_option("--traces", s.traces_dir, "Directory of search traces");
  synth->add_option("--mode", s.synth_mode, "reward or switch")
      ->check(CLI::IsMember({"reward", "switch"}));
  synth->add_option("--level", s.level, "Switch level: step or instance")
      ->check(CLI::IsMember({"step", "instance"}));
  synth->add_flag("--with-reference", s.with_reference,
                  "Put the ground-truth answer into scoring prompts");
  synth->add_flag("--no-balance", s.no_balance, "Skip dedup and class balancing");
  synth->add_option("--dataset", s.dataset_file, "Dataset for instance-level labels");
  synth->add_option("--out", s.out_dir, "Output directory");

  auto* worldgen = app.add_subcommand("worldgen", "Generate a synthetic fact world");
  worldgen->add_option("--questions", s.world.questions, "Number of questions");
  worldgen->add_option("--branch", s.world.branch_factor, "Children per statement");
  worldgen->add_option("--depth-min", s.world.depth_min, "Minimum answer depth");
  worldgen->add_option("--depth-max", s.world.depth_max, "Maximum answer depth (<= 8)");
  worldgen->add_option("--hallucination-rate", s.world.hallucination_rate,
                       "Chance that a child statement is false");
  worldgen->add_flag("--adversarial", s.world.adversarial,
                     "Make a false statement the most likely continuation");
  worldgen->add_option("--out", s.world_out, "World file to write");
  worldgen->add_option("--dataset", s.dataset_out, "Also write the questions as a dataset");

  auto* inspect = app.add_subcommand("inspect", "Summarize a tree dump");
  inspect->add_option("tree", s.tree_file, "Tree file")->required();
  inspect->add_option("--dot", s.dot_file, "Write a Graphviz file");

  setup_logging("warn", err);
  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    if (auto cfg = prescan(args, "--config")) apply_config(app, read_config_file(*cfg));
    app.parse(rev);
    apply_env(app, s);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  setup_logging(s.log_level, err);

  try {
    if (*search) return cmd_search(s, out);
    if (*eval) return cmd_eval(s, out);
    if (*synth) return cmd_synth(s, out);
    if (*worldgen) return cmd_worldgen(s, out);
    if (*inspect) return cmd_inspect(s, out, err);
  } catch (const TreeParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const ScoringError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const EvaluationError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace mctsgen::cli
