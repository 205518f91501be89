#include <boost/multiprecision/cpp_dec_float.hpp>

#include "doctest.h"
#include "mctsgen/engine.hpp"
#include "mctsgen/errors.hpp"
#include "mctsgen/segment.hpp"
#include "support.hpp"

using namespace mctsgen;
using testing::ScriptedPolicy;
using testing::ScriptedReward;

namespace {

using Dec = boost::multiprecision::cpp_dec_float_50;

double uct_oracle(double v, std::uint64_t n, std::uint64_t parent, double w) {
  Dec r = Dec(v) + Dec(w) * boost::multiprecision::sqrt(boost::multiprecision::log(Dec(parent)) /
                                                          Dec(n));
  return r.convert_to<double>();
}

SearchTree with_values(std::vector<std::pair<double, std::uint64_t>> children) {
  SearchTree t("Q?");
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < children.size(); ++i) {
    const auto id = t.add_child(0, {"c" + std::to_string(i) + ".", false});
    t.node(id).value = children[i].first;
    t.node(id).visit_count = children[i].second;
    total += children[i].second;
  }
  t.node(0).visit_count = std::max<std::uint64_t>(total, 1);
  t.node(0).value = 0.5;
  return t;
}

// Replies "rI <|end|>" for sample I; the reward scores rI with likerts[I].
struct RolloutRig {
  std::vector<int> likerts;
  ScriptedPolicy policy{[](const PolicyRequest& r) {
    std::vector<std::string> out;
    for (int i = 0; i < r.samples; ++i) out.push_back("r" + std::to_string(i) + ". <|end|>");
    return out;
  }};
  ScriptedReward reward{[this](const RewardRequest& r) {
    const auto last = segment_sentences(r.answer_fragment).back().text;
    return likerts.at(std::stoul(last.substr(1)));
  }};
};

}  // namespace

TEST_CASE("uct score examples") {
  CHECK(uct_score(0.7, 3, 9, 0.0) == 0.7);
  CHECK(uct_score(0.5, 2, 10, 0.4) == doctest::Approx(0.929193).epsilon(1e-6));
  CHECK(std::abs(uct_score(0.5, 2, 10, 0.4) - uct_oracle(0.5, 2, 10, 0.4)) < 1e-12);
  CHECK(uct_score(0.5, 2, 10, 0.4) > uct_score(0.5, 3, 10, 0.4));
  CHECK_THROWS_AS(uct_score(0.5, 0, 10, 0.4), ContractViolation);
  CHECK_THROWS_AS(uct_score(0.5, 1, 0, 0.4), ContractViolation);
}

TEST_CASE("select_leaf") {
  SUBCASE("root only") {
    SearchTree t("Q?");
    CHECK(select_leaf(t, 0.4) == 0);
  }
  SUBCASE("two children with equal visits") {
    auto t = with_values({{0.9, 2}, {0.1, 2}});
    CHECK(select_leaf(t, 0.4) == 1);
  }
  SUBCASE("unevaluated children are skipped") {
    auto t = with_values({{0.2, 1}, {0.0, 0}});
    CHECK(select_leaf(t, 0.4) == 1);
    t = with_values({{0.0, 0}, {0.0, 0}});
    CHECK(select_leaf(t, 0.4) == 0);
  }
  SUBCASE("three-level tree matches brute-force uct") {
    SearchTree t("Q?");
    auto a = t.add_child(0, {"a.", false});
    auto b = t.add_child(0, {"b.", false});
    auto a1 = t.add_child(a, {"a1.", false});
    auto a2 = t.add_child(a, {"a2.", false});
    auto b1 = t.add_child(b, {"b1.", false});
    auto a21 = t.add_child(a2, {"a21.", true});
    struct NV {
      NodeId id;
      double v;
      std::uint64_t n;
    };
    for (auto [id, v, n] : {NV{0, 0.5, 9}, NV{a, 0.55, 5}, NV{b, 0.7, 3}, NV{a1, 0.4, 2},
                            NV{a2, 0.65, 2}, NV{b1, 0.9, 2}, NV{a21, 0.8, 1}}) {
      t.node(id).value = v;
      t.node(id).visit_count = n;
    }
    for (double w : {0.0, 0.4, 1.0, 3.0}) {
      CAPTURE(w);
      NodeId cur = 0;
      while (true) {
        const auto& kids = t.node(cur).children;
        if (kids.empty()) break;
        NodeId best = kids.front();
        double best_score = -1e300;
        for (auto c : kids) {
          const double s =
              uct_oracle(t.node(c).value, t.node(c).visit_count, t.node(cur).visit_count, w);
          if (s > best_score) {
            best_score = s;
            best = c;
          }
        }
        cur = best;
      }
      CHECK(select_leaf(t, w) == cur);
    }
  }
}

TEST_CASE("expand dedups exact duplicates") {
  const std::vector<std::string> samples{"A.", "B.", "A.", "C.", " B. ", "D.",
                                         "E.", "A.", "F.", "G."};
  ScriptedPolicy policy([&](const PolicyRequest& r) {
    CHECK(r.samples == 10);
    return samples;
  });
  SearchTree t("Q?");
  const auto kids = expand(t, 0, policy, 10, 0.9);
  CHECK(kids.size() == 7);
  CHECK(t.size() == 8);
  for (auto k : kids) CHECK(t.node(k).visit_count == 0);
  CHECK(t.node(kids[0]).sentence.text == "A.");
  CHECK(t.node(kids[1]).sentence.text == "B.");

  t.node(kids[0]).terminal = true;
  CHECK_THROWS_AS(expand(t, kids[0], policy, 10, 0.9), ContractViolation);
  CHECK_THROWS_AS(expand(t, 0, policy, 10, 0.9), ContractViolation);  // not a leaf
  CHECK_THROWS_AS(expand(t, kids[1], policy, 0, 0.9), ContractViolation);
}

TEST_CASE("expand marks a node terminal when every sample is empty") {
  ScriptedPolicy done([](const PolicyRequest& r) {
    return std::vector<std::string>(r.samples, "<|end|>");
  });
  SearchTree t("Q?");
  CHECK(expand(t, 0, done, 3, 0.9).empty());
  CHECK(t.node(0).terminal);
}

TEST_CASE("evaluate averages mapped rollout scores") {
  SUBCASE("single rollout likert 1") {
    RolloutRig rig{{1}};
    SearchTree t("Q?");
    const auto c = t.add_child(0, {"x.", false});
    const auto e = evaluate_child(t, c, rig.policy, rig.reward, {1, 0.9, RewardMode::generative});
    CHECK(e.value == 1.0);
    CHECK(t.node(c).visit_count == 1);
  }
  SUBCASE("likerts 1 1 2 3 2") {
    RolloutRig rig{{1, 1, 2, 3, 2}};
    SearchTree t("Q?");
    const auto c = t.add_child(0, {"x.", false});
    const auto e = evaluate_child(t, c, rig.policy, rig.reward, {5, 0.9, RewardMode::generative});
    CHECK(e.value == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(t.node(c).value == doctest::Approx(0.8).epsilon(1e-15));
    REQUIRE(e.rollouts.size() == 5);
    CHECK(e.rollouts[0].response == "x. r0.");
    CHECK(rig.reward.seen[0].answer_fragment == "x. r0.");
    CHECK_FALSE(rig.reward.seen[0].reference_answer.has_value());
  }
  SUBCASE("all likert 5") {
    RolloutRig rig{{5, 5, 5}};
    SearchTree t("Q?");
    const auto c = t.add_child(0, {"x.", false});
    CHECK(evaluate_child(t, c, rig.policy, rig.reward, {3, 0.9, RewardMode::generative}).value ==
          0.0);
  }
}

TEST_CASE("a scoring failure is retried once then raises") {
  ScriptedPolicy policy([](const PolicyRequest&) { return std::vector<std::string>{"y. <|end|>"}; });
  int calls = 0;
  ScriptedReward flaky([&](const RewardRequest&) -> int {
    if (++calls == 1) throw ScoringError("garbled", "??");
    return 2;
  });
  SearchTree t("Q?");
  const auto c = t.add_child(0, {"x.", false});
  CHECK(evaluate_child(t, c, policy, flaky, {1, 0.9, RewardMode::generative}).value == 0.75);
  CHECK(calls == 2);

  ScriptedReward broken([](const RewardRequest&) -> int { throw ScoringError("bad", "!"); });
  const auto d = t.add_child(0, {"z.", false});
  try {
    evaluate_child(t, d, policy, broken, {1, 0.9, RewardMode::generative});
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.node_id() == d);
  }
  CHECK(t.node(d).visit_count == 0);
}

TEST_CASE("backpropagate running mean") {
  SearchTree t("Q?");
  const auto a = t.add_child(0, {"a.", false});
  const auto b = t.add_child(a, {"b.", false});
  t.node(0).value = 0.6;
  t.node(0).visit_count = 4;
  t.node(a).value = 0.5;
  t.node(a).visit_count = 1;
  t.node(b).value = 0.4;
  t.node(b).visit_count = 2;
  SUBCASE("r equal to the mean") {
    backpropagate(t, 0, 0.6);
    CHECK(t.node(0).value == doctest::Approx(0.6));
    CHECK(t.node(0).visit_count == 5);
  }
  SUBCASE("hand examples") {
    backpropagate(t, a, 1.0);
    CHECK(t.node(a).value == doctest::Approx(0.75));
    CHECK(t.node(a).visit_count == 2);
    CHECK(t.node(b).visit_count == 2);  // below the leaf: untouched
  }
  SUBCASE("matches the mean of the full reward history") {
    backpropagate(t, b, 0.8);
    CHECK(t.node(b).value == doctest::Approx((0.4 * 2 + 0.8) / 3).epsilon(1e-15));
    CHECK(std::abs(t.node(b).value - 0.533333333) < 1e-9);
    CHECK(t.node(b).visit_count == 3);
  }
  CHECK_THROWS_AS(backpropagate(t, b, 1.5), ContractViolation);
}

TEST_CASE("extract_best_path") {
  SUBCASE("single chain") {
    SearchTree t("Q?");
    auto a = t.add_child(0, {"a.", false});
    auto b = t.add_child(a, {"b.", true});
    for (auto id : {NodeId{0}, a, b}) {
      t.node(id).visit_count = 1;
      t.node(id).value = 0.3;
    }
    CHECK(extract_best_path(t) == std::vector<NodeId>{0, a, b});
    CHECK(path_answer(t, extract_best_path(t)) == "a. b.");
  }
  SUBCASE("greedy per level") {
    auto t = with_values({{0.2, 1}, {0.9, 1}});
    auto x = t.add_child(2, {"x.", false});
    auto y = t.add_child(2, {"y.", false});
    t.node(x).value = 0.5;
    t.node(x).visit_count = 1;
    t.node(y).value = 0.6;
    t.node(y).visit_count = 1;
    CHECK(extract_best_path(t) == std::vector<NodeId>{0, 2, y});
  }
  SUBCASE("ties go to the lowest id") {
    auto t = with_values({{0.7, 1}, {0.7, 3}});
    CHECK(extract_best_path(t) == std::vector<NodeId>{0, 1});
  }
  SUBCASE("a tied open leaf loses to a branch that reaches a terminal") {
    auto t = with_values({{1.0, 1}, {1.0, 2}});
    auto end = t.add_child(2, {"done.", true});
    t.node(end).value = 1.0;
    t.node(end).visit_count = 1;
    CHECK(extract_best_path(t) == std::vector<NodeId>{0, 2, end});
  }
  SUBCASE("a higher terminal-free branch still loses") {
    auto t = with_values({{0.9, 1}, {0.4, 2}});
    auto end = t.add_child(2, {"done.", true});
    t.node(end).value = 0.4;
    t.node(end).visit_count = 1;
    CHECK(extract_best_path(t) == std::vector<NodeId>{0, 2, end});
  }
}

TEST_CASE("run_search with a fast instance decision returns the direct completion") {
  ScriptedPolicy policy([](const PolicyRequest& r) {
    CHECK(r.mode == PolicyMode::full_completion);
    return std::vector<std::string>{"Direct one. Direct two. <|end|>"};
  });
  ScriptedReward reward([](const RewardRequest&) { return 1; });
  FixedSwitch fast(ThinkingMode::fast);
  const auto r = run_search("Q?", SearchConfig{}, policy, reward, fast);
  CHECK(r.answer == "Direct one. Direct two.");
  CHECK(r.tree.size() == 1);
  CHECK(r.reason.kind == TerminationReason::Kind::instance_fast);
  CHECK(policy.calls == 1);
}

namespace {

// Two-branch toy: "Good." leads to a truthful terminal, "Bad." to a wrong one.
// Rollouts complete deterministically and the reward reads the branch.
struct ToyWorld {
  ScriptedPolicy policy{[](const PolicyRequest& r) {
    std::vector<std::string> out;
    const auto& prefix = r.context.prefix;
    for (int i = 0; i < r.samples; ++i) {
      const int s = r.sample_offset + i;
      if (r.mode == PolicyMode::next_sentence) {
        if (prefix.empty()) {
          out.push_back(s % 2 == 0 ? "Good." : "Bad.");
        } else if (prefix.size() == 1) {
          out.push_back(prefix[0].text == "Good." ? "Right end. <|end|>" : "Wrong end. <|end|>");
        } else {
          out.push_back("<|end|>");
        }
      } else {
        if (prefix.empty()) {
          out.push_back(s % 2 == 0 ? "Good. Right end. <|end|>" : "Bad. Wrong end. <|end|>");
        } else if (prefix.size() == 1) {
          out.push_back(prefix[0].text == "Good." ? "Right end. <|end|>" : "Wrong end. <|end|>");
        } else {
          out.push_back("<|end|>");
        }
      }
    }
    return out;
  }};
  ScriptedReward reward{[](const RewardRequest& r) {
    return r.answer_fragment.find("Bad.") == std::string::npos ? 1 : 5;
  }};
  FixedSwitch slow{ThinkingMode::slow};
};

}  // namespace

TEST_CASE("run_search stops when a terminal child reaches the threshold") {
  ToyWorld w;
  SearchConfig c;
  c.expansions = 2;
  c.rollouts = 2;
  c.max_iterations = 20;
  c.reward_threshold = 0.9;
  MemoryEventSink events;
  SearchOptions so;
  so.events = &events;
  const auto r = run_search("Q?", c, w.policy, w.reward, w.slow, so);
  CHECK(r.reason.kind == TerminationReason::Kind::reward_threshold_met);
  CHECK(r.reason.iterations_used < c.max_iterations);
  CHECK(r.answer == "Good. Right end.");
  CHECK(r.slow_step_ratio == 1.0);
  CHECK(events.events().front()["event"] == "start");
  CHECK(events.events().back()["event"] == "end");
  const auto& last_iter = events.events()[events.events().size() - 2];
  CHECK(last_iter["note"] == "reward_threshold_met");
  CHECK_NOTHROW(r.tree.validate());
}

TEST_CASE("run_search honours the iteration cap") {
  ToyWorld w;
  SearchConfig c;
  c.expansions = 2;
  c.rollouts = 1;
  c.max_iterations = 1;
  c.reward_threshold = 1.0;
  const auto r = run_search("Q?", c, w.policy, w.reward, w.slow);
  CHECK(r.reason.kind == TerminationReason::Kind::max_iterations);
  CHECK(r.reason.iterations_used == 1);
  CHECK(r.tree.node(0).visit_count == 1);
  CHECK(r.tree.node(0).value == doctest::Approx(0.5));
}

TEST_CASE("run_search keeps visit counts consistent over many iterations") {
  ToyWorld w;
  SearchConfig c;
  c.expansions = 2;
  c.rollouts = 2;
  c.max_iterations = 30;
  c.reward_threshold = 1.01;
  int seen = 0;
  SearchOptions so;
  so.on_iteration = [&](const SearchTree& t, int it) {
    ++seen;
    CHECK(t.node(0).visit_count == static_cast<std::uint64_t>(it));
    t.validate();
  };
  const auto r = run_search("Q?", c, w.policy, w.reward, w.slow, so);
  CHECK(seen == 30);
  CHECK(r.answer == "Good. Right end.");
  CHECK(r.reason.kind == TerminationReason::Kind::max_iterations);
}

TEST_CASE("a backend failure leaves a recovery file") {
  testing::TempDir dir("engine");
  int calls = 0;
  ScriptedPolicy failing([&](const PolicyRequest& r) -> std::vector<std::string> {
    if (++calls > 3) throw TransportError("connection reset");
    const bool full = r.mode == PolicyMode::full_completion;
    return std::vector<std::string>(r.samples, full ? "Step. <|end|>" : "Step.");
  });
  ScriptedReward reward([](const RewardRequest&) { return 2; });
  FixedSwitch slow(ThinkingMode::slow);
  SearchConfig c;
  c.expansions = 1;
  c.rollouts = 1;
  c.reward_threshold = 1.01;
  SearchOptions so;
  so.recovery_path = dir / "partial.tree.json";
  CHECK_THROWS_AS(run_search("Q?", c, failing, reward, slow, so), TransportError);
  REQUIRE(std::filesystem::exists(dir / "partial.tree.json"));
  const auto doc = deserialize_tree(testing::slurp(dir / "partial.tree.json"));
  CHECK(doc.reason.kind == TerminationReason::Kind::aborted);
  CHECK(doc.tree.size() >= 2);
}

TEST_CASE("run_search rejects an invalid config") {
  ToyWorld w;
  SearchConfig c;
  c.rollouts = 0;
  CHECK_THROWS_AS(run_search("Q?", c, w.policy, w.reward, w.slow), ValidationError);
}
