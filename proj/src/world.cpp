#include "mctsgen/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mctsgen/errors.hpp"
#include "mctsgen/rng.hpp"
#include "mctsgen/segment.hpp"
#include "mctsgen/sim_clock.hpp"
#include "mctsgen/tree_io.hpp"

namespace mctsgen {

using nlohmann::json;

namespace {

constexpr std::array kConsonants = {"b", "d", "f", "g", "k", "l", "m", "n",
                                    "p", "r", "s", "t", "v", "z", "th", "sh"};
constexpr std::array kVowels = {"a", "e", "i", "o", "u", "ai", "ea", "io"};
constexpr std::array kVerbs = {"borders", "faces",   "guards",    "feeds",
                               "shelters", "overlooks", "follows", "rivals"};
constexpr std::array kAdjectives = {"northern", "amber",  "quiet",  "ancient",
                                    "narrow",   "silver", "hollow", "eastern"};
constexpr std::array kNouns = {"river", "harbor", "valley",  "archive",
                               "market", "bridge", "orchard", "tower"};
constexpr std::array kRelations = {"capital", "founder", "emblem", "patron",
                                   "rival",   "oldest guild", "chief export", "river"};

template <typename Array>
std::string pick(rng::Stream& s, const Array& a) {
  return a[s.below(a.size())];
}

class NameSource {
 public:
  explicit NameSource(rng::Stream& s) : s_(s) {}

  std::string fresh() {
    while (true) {
      std::string w;
      const auto syllables = s_.between(2, 3);
      for (int i = 0; i < syllables; ++i) w += pick(s_, kConsonants) + pick(s_, kVowels);
      if (s_.bernoulli(0.5)) w += pick(s_, kConsonants);
      w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      if (used_.insert(w).second) return w;
    }
  }

 private:
  rng::Stream& s_;
  std::set<std::string> used_;
};

// attempt > 0 redraws a question whose text collided with an earlier one.
WorldQuestion generate_question(const WorldSpec& spec, std::size_t index, std::uint64_t attempt) {
  rng::Stream s(attempt == 0 ? rng::mix({spec.seed, 0x576F726C64ULL, index})
                             : rng::mix({spec.seed, 0x576F726C64ULL, index, attempt}));
  NameSource names(s);

  WorldQuestion q;
  char id[16];
  std::snprintf(id, sizeof id, "q%04zu", index);
  q.id = id;
  q.depth = static_cast<int>(s.between(spec.depth_min, spec.depth_max));

  const auto subject = names.fresh();
  const auto relation = pick(s, kRelations);
  q.question = "What is the " + relation + " of " + subject + "?";
  const auto answer_text = "The " + relation + " of " + subject + " is " + names.fresh() + ".";
  q.answer = answer_text;

  auto statement = [&] {
    return names.fresh() + " " + pick(s, kVerbs) + " the " + pick(s, kAdjectives) + " " +
           pick(s, kNouns) + ".";
  };
  auto wrong_answer = [&] {
    return "The " + relation + " of " + subject + " is " + names.fresh() + ".";
  };
  auto add = [&](std::string text, bool truthful, bool terminal) {
    WorldNode n;
    n.id = static_cast<std::uint32_t>(q.nodes.size());
    n.text = std::move(text);
    n.truthful = truthful;
    n.terminal = terminal;
    q.nodes.push_back(std::move(n));
    return q.nodes.back().id;
  };

  add(q.question, true, false);
  std::optional<std::uint32_t> answer_node;
  std::deque<std::pair<std::uint32_t, int>> frontier{{0, 0}};
  while (!frontier.empty()) {
    auto [id, level] = frontier.front();
    frontier.pop_front();
    const bool truthful = q.nodes[id].truthful;
    const bool last = level == q.depth - 1;

    // Which of the branch slots hold a hallucinated statement.
    std::vector<char> halluc(spec.branch_factor, 1);
    if (truthful) {
      for (auto& h : halluc) h = s.bernoulli(spec.hallucination_rate) ? 1 : 0;
      if (std::all_of(halluc.begin(), halluc.end(), [](char h) { return h == 1; })) {
        halluc[s.below(halluc.size())] = 0;
      }
      if (spec.adversarial && spec.branch_factor >= 2 &&
          std::none_of(halluc.begin(), halluc.end(), [](char h) { return h == 1; })) {
        halluc[s.below(halluc.size())] = 1;
      }
    }

    std::vector<std::uint32_t> children;
    std::vector<int> weights;
    bool answer_linked = false;
    for (int slot = 0; slot < spec.branch_factor; ++slot) {
      const int weight = static_cast<int>(s.between(1, 9));
      std::uint32_t child = 0;
      if (!halluc[slot]) {
        if (last) {
          if (answer_linked) continue;  // truthful slots share the one answer node
          if (!answer_node) answer_node = add(answer_text, true, true);
          child = *answer_node;
          answer_linked = true;
        } else {
          child = add(statement(), true, false);
          frontier.emplace_back(child, level + 1);
        }
      } else {
        child = last ? add(wrong_answer(), false, true) : add(statement(), false, false);
        if (!last) frontier.emplace_back(child, level + 1);
      }
      children.push_back(child);
      weights.push_back(weight);
    }

    if (spec.adversarial && truthful) {
      bool boosted = false;
      for (std::size_t i = 0; i < children.size(); ++i) {
        const bool child_truthful = q.nodes[children[i]].truthful;
        if (child_truthful) {
          weights[i] = 1;
        } else if (!boosted) {
          weights[i] = 1000;
          boosted = true;
        }
      }
    }
    q.nodes[id].children = std::move(children);
    q.nodes[id].weights = std::move(weights);
  }
  return q;
}

std::size_t draw(const std::vector<int>& weights, double u, double temperature) {
  if (temperature == 0.0) {
    return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) -
                                    weights.begin());
  }
  std::vector<double> scaled(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    scaled[i] = std::pow(static_cast<double>(weights[i]), 1.0 / temperature);
    total += scaled[i];
  }
  const double target = u * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    cum += scaled[i];
    if (target < cum) return i;
  }
  return scaled.size() - 1;
}

template <typename T>
T get_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("world file: missing field '") + key + "'");
  return it->get<T>();
}

}  // namespace

void WorldSpec::validate() const {
  if (questions < 0) throw ValidationError("world questions must be >= 0");
  if (branch_factor < 1) throw ValidationError("branch_factor must be >= 1");
  if (depth_min < 1 || depth_max < depth_min) throw ValidationError("need 1 <= depth_min <= depth_max");
  if (depth_max > 8) throw ValidationError("depth_max above 8 is not supported");
  if (!(hallucination_rate >= 0.0 && hallucination_rate <= 1.0)) {
    throw ValidationError("hallucination_rate must be in [0,1]");
  }
}

FactWorld FactWorld::generate(const WorldSpec& spec) {
  spec.validate();
  FactWorld w;
  w.spec_ = spec;
  std::set<std::string> seen;
  for (int i = 0; i < spec.questions; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      auto q = generate_question(spec, static_cast<std::size_t>(i), attempt);
      if (seen.insert(q.question).second) {
        w.questions_.push_back(std::move(q));
        break;
      }
    }
  }
  w.index();
  return w;
}

void FactWorld::index() {
  by_question_.clear();
  by_text_.assign(questions_.size(), {});
  for (std::size_t q = 0; q < questions_.size(); ++q) {
    if (!by_question_.emplace(questions_[q].question, q).second) {
      throw ValidationError("duplicate question text: " + questions_[q].question);
    }
    for (const auto& n : questions_[q].nodes) {
      if (n.id == 0) continue;
      by_text_[q].emplace(n.text, n.id);
    }
  }
}

json FactWorld::to_json() const {
  json qs = json::array();
  for (const auto& q : questions_) {
    json nodes = json::array();
    for (const auto& n : q.nodes) {
      nodes.push_back({{"id", n.id},
                       {"text", n.text},
                       {"truthful", n.truthful},
                       {"terminal", n.terminal},
                       {"children", n.children},
                       {"weights", n.weights}});
    }
    qs.push_back({{"id", q.id},
                  {"question", q.question},
                  {"answer", q.answer},
                  {"lang", q.language_tag},
                  {"depth", q.depth},
                  {"nodes", std::move(nodes)}});
  }
  return {{"format", "mctsgen-world"},
          {"version", kFormatVersion},
          {"seed", spec_.seed},
          {"spec",
           {{"questions", spec_.questions},
            {"branch_factor", spec_.branch_factor},
            {"depth_min", spec_.depth_min},
            {"depth_max", spec_.depth_max},
            {"hallucination_rate", round_sig9(spec_.hallucination_rate)},
            {"adversarial", spec_.adversarial}}},
          {"questions", std::move(qs)}};
}

std::string FactWorld::serialize() const { return to_json().dump(2) + "\n"; }

void FactWorld::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write world file " + path.string());
  out << serialize();
}

FactWorld FactWorld::from_json(const json& j) {
  try {
    if (get_field<std::string>(j, "format") != "mctsgen-world") {
      throw ValidationError("not a world file");
    }
    if (get_field<int>(j, "version") != kFormatVersion) {
      throw ValidationError("unsupported world file version");
    }
    FactWorld w;
    const auto spec = get_field<json>(j, "spec");
    w.spec_.seed = get_field<std::uint64_t>(j, "seed");
    w.spec_.questions = get_field<int>(spec, "questions");
    w.spec_.branch_factor = get_field<int>(spec, "branch_factor");
    w.spec_.depth_min = get_field<int>(spec, "depth_min");
    w.spec_.depth_max = get_field<int>(spec, "depth_max");
    w.spec_.hallucination_rate = get_field<double>(spec, "hallucination_rate");
    w.spec_.adversarial = get_field<bool>(spec, "adversarial");
    for (const auto& jq : get_field<json>(j, "questions")) {
      WorldQuestion q;
      q.id = get_field<std::string>(jq, "id");
      q.question = get_field<std::string>(jq, "question");
      q.answer = get_field<std::string>(jq, "answer");
      q.language_tag = get_field<std::string>(jq, "lang");
      q.depth = get_field<int>(jq, "depth");
      for (const auto& jn : get_field<json>(jq, "nodes")) {
        WorldNode n;
        n.id = get_field<std::uint32_t>(jn, "id");
        n.text = get_field<std::string>(jn, "text");
        n.truthful = get_field<bool>(jn, "truthful");
        n.terminal = get_field<bool>(jn, "terminal");
        n.children = get_field<std::vector<std::uint32_t>>(jn, "children");
        n.weights = get_field<std::vector<int>>(jn, "weights");
        if (n.id != q.nodes.size()) throw ValidationError("world node ids must be dense");
        if (n.children.size() != n.weights.size()) {
          throw ValidationError("world node children and weights differ in length");
        }
        q.nodes.push_back(std::move(n));
      }
      for (const auto& n : q.nodes) {
        for (auto c : n.children) {
          if (c >= q.nodes.size() || c <= n.id) {
            throw ValidationError("world graph edge " + std::to_string(n.id) + "->" +
                                  std::to_string(c) + " is invalid");
          }
        }
      }
      w.questions_.push_back(std::move(q));
    }
    w.index();
    return w;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("world file: ") + e.what());
  }
}

FactWorld FactWorld::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read world file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ValidationError("world file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::size_t FactWorld::question_index(std::string_view question) const {
  auto text = std::string(trim(question));
  if (auto it = by_question_.find(text); it != by_question_.end()) return it->second;
  if (text.ends_with(kCotSuffix)) {
    auto stripped = std::string(trim(std::string_view(text).substr(0, text.size() - kCotSuffix.size())));
    if (auto it = by_question_.find(stripped); it != by_question_.end()) return it->second;
  }
  throw LookupError("unknown question: " + text);
}

std::uint32_t FactWorld::locate(std::size_t question, const std::vector<Sentence>& prefix) const {
  const auto& q = questions_.at(question);
  std::uint32_t cur = 0;
  for (const auto& s : prefix) {
    const auto& children = q.nodes[cur].children;
    auto it = std::find_if(children.begin(), children.end(),
                           [&](std::uint32_t c) { return q.nodes[c].text == s.text; });
    if (it == children.end()) {
      throw LookupError("prefix sentence not reachable in world: " + s.text);
    }
    cur = *it;
  }
  return cur;
}

std::optional<bool> FactWorld::label(std::size_t question, std::string_view text) const {
  const auto& idx = by_text_.at(question);
  if (auto it = idx.find(std::string(text)); it != idx.end()) {
    return questions_[question].nodes[it->second].truthful;
  }
  return std::nullopt;
}

double FactWorld::hallucinated_mass(std::size_t question, std::uint32_t node) const {
  const auto& q = questions_.at(question);
  const auto& n = q.nodes.at(node);
  double total = 0.0;
  double bad = 0.0;
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    total += n.weights[i];
    if (!q.nodes[n.children[i]].truthful) bad += n.weights[i];
  }
  return total == 0.0 ? 0.0 : bad / total;
}

std::size_t FactWorld::sample_child(std::size_t question, std::uint32_t node,
                                    std::uint64_t run_seed, std::uint64_t sample_index,
                                    std::uint64_t purpose, double temperature) const {
  const auto& n = questions_.at(question).nodes.at(node);
  if (n.children.empty()) throw ContractViolation("sampling below a leaf statement");
  const auto key = rng::mix({spec_.seed, run_seed, question, node, sample_index, purpose});
  return draw(n.weights, rng::to_unit(rng::splitmix64(key)), temperature);
}

double FactWorld::hallucinated_fraction(std::size_t question, std::string_view answer) const {
  const auto sentences = segment_sentences(answer);
  if (sentences.empty()) throw ValidationError("answer has no sentences");
  std::size_t bad = 0;
  for (const auto& s : sentences) {
    auto l = label(question, s.text);
    if (!l || !*l) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(sentences.size());
}

std::vector<std::vector<std::uint32_t>> FactWorld::enumerate_paths(std::size_t question) const {
  const auto& q = questions_.at(question);
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::vector<std::uint32_t>> stack{{0}};
  while (!stack.empty()) {
    auto path = std::move(stack.back());
    stack.pop_back();
    const auto& n = q.nodes[path.back()];
    if (n.terminal || n.children.empty()) {
      out.push_back(std::vector<std::uint32_t>(path.begin() + 1, path.end()));
      continue;
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      auto next = path;
      next.push_back(*it);
      stack.push_back(std::move(next));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> WorldPolicy::generate_raw(const PolicyRequest& request) const {
  const auto qi = world_.question_index(request.context.question);
  const auto start = world_.locate(qi, request.context.prefix);
  const auto& nodes = world_.questions()[qi].nodes;
  const std::string marker(kEndMarker);

  std::vector<std::string> out;
  std::size_t generated = 0;
  for (int i = 0; i < request.samples; ++i) {
    const auto sample_index = static_cast<std::uint64_t>(request.sample_offset + i);
    if (request.mode == PolicyMode::next_sentence) {
      const auto& n = nodes[start];
      if (n.terminal || n.children.empty()) {
        out.push_back(marker);
        continue;
      }
      const auto c = n.children[world_.sample_child(qi, start, run_seed_, sample_index,
                                                    kPurposeNextSentence, request.temperature)];
      ++generated;
      out.push_back(nodes[c].terminal ? nodes[c].text + " " + marker : nodes[c].text);
    } else {
      std::string text;
      auto cur = start;
      while (!nodes[cur].terminal && !nodes[cur].children.empty()) {
        cur = nodes[cur].children[world_.sample_child(qi, cur, run_seed_, sample_index,
                                                      kPurposeCompletion, request.temperature)];
        if (!text.empty()) text += ' ';
        text += nodes[cur].text;
        ++generated;
      }
      out.push_back(text.empty() ? marker : text + " " + marker);
    }
  }
  sim_clock::charge(latency_.policy_call + latency_.per_sentence * static_cast<double>(generated));
  return out;
}

int likert_from_fraction(double fraction) {
  return 1 + static_cast<int>(std::round(4.0 * fraction));
}

HallucinationScore WorldReward::score(const RewardRequest& request) const {
  sim_clock::charge(latency_.reward_call);
  const auto qi = world_.question_index(request.question);
  const auto sentences = segment_sentences(request.answer_fragment);
  const double fraction = world_.hallucinated_fraction(qi, request.answer_fragment);
  const int likert = likert_from_fraction(fraction);
  std::optional<std::string> critique;
  if (request.mode == RewardMode::critique) {
    const auto bad = static_cast<std::size_t>(std::lround(fraction * sentences.size()));
    critique = bad == 0 ? std::string("Every statement is supported by the known facts.")
                        : std::to_string(bad) + " of " + std::to_string(sentences.size()) +
                              " statements are unsupported or wrong.";
  }
  return HallucinationScore::from_likert(likert, std::move(critique));
}

double expected_rollout_likert(const FactWorld& world, std::size_t question,
                               const std::vector<Sentence>& prefix) {
  const auto& q = world.questions().at(question);
  const auto node = world.locate(question, prefix);
  const int depth = q.depth;
  const int at = static_cast<int>(prefix.size());
  auto likert_for = [depth](int bad) {
    return static_cast<double>(likert_from_fraction(static_cast<double>(bad) / depth));
  };
  int bad = 0;
  for (const auto& s : prefix) bad += world.label(question, s.text).value_or(false) ? 0 : 1;
  // Hallucination is absorbing and every answer has `depth` sentences, so a
  // hallucinated state's completion is fully determined.
  if (bad > 0) return likert_for(bad + depth - at);

  // Truthful state: recurse over truthful children only, keyed by node.
  std::unordered_map<std::uint32_t, double> memo;
  std::function<double(std::uint32_t, int)> truthful = [&](std::uint32_t id, int d) -> double {
    const auto& n = q.nodes[id];
    if (n.children.empty()) return likert_for(0);
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    double total = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const auto c = n.children[i];
      const double w = n.weights[i];
      total += w;
      sum += w * (q.nodes[c].truthful ? truthful(c, d + 1) : likert_for(depth - d));
    }
    const double e = sum / total;
    memo.emplace(id, e);
    return e;
  };
  return truthful(node, at);
}

HeuristicSwitch::Estimator world_risk_estimator(const FactWorld& world, SimLatency latency) {
  return [&world, latency](const SwitchRequest& req) {
    sim_clock::charge(latency.switch_call);
    return expected_rollout_likert(world, world.question_index(req.question), req.prefix);
  };
}

}  // namespace mctsgen
