#include "doctest.h"
#include "mctsgen/dataset.hpp"
#include "mctsgen/errors.hpp"
#include "mctsgen/harness.hpp"
#include "mctsgen/world.hpp"
#include "support.hpp"

using namespace mctsgen;
using testing::ScriptedPolicy;
using testing::ScriptedReward;

namespace {

const QaItem kItem{"i1", "Q?", "A.", "en"};

// Sample i of a completion request returns replies[offset + i].
ScriptedPolicy sequence(std::vector<std::string> replies, std::vector<PolicyRequest>* seen = nullptr) {
  return ScriptedPolicy([replies, seen](const PolicyRequest& r) {
    if (seen) seen->push_back(r);
    std::vector<std::string> out;
    for (int i = 0; i < r.samples; ++i) {
      const auto& text = replies.at(static_cast<std::size_t>(r.sample_offset + i));
      if (text == "FAIL") throw TransportError("boom");
      out.push_back(text + " <|end|>");
    }
    return out;
  });
}

std::vector<QaItem> world_items(const FactWorld& w) {
  std::vector<QaItem> items;
  for (const auto& q : w.questions()) items.push_back({q.id, q.question, q.answer, "en"});
  return items;
}

}  // namespace

TEST_CASE("direct generation returns the completion") {
  auto p = sequence({"Echo this."});
  CHECK(run_direct(kItem, p, 0.9) == "Echo this.");
}

TEST_CASE("cot appends the suffix and keeps the last sentence") {
  std::vector<PolicyRequest> seen;
  auto p = sequence({"Step one. Step two. So it is A."}, &seen);
  CHECK(run_cot(kItem, p, 0.9) == "So it is A.");
  CHECK(seen.front().context.question == "Q? Let's think step by step.");
  auto single = sequence({"Only."});
  CHECK(run_cot(kItem, single, 0.9) == "Only.");
}

TEST_CASE("self-consistency votes on the normalized answer") {
  SUBCASE("identical") {
    auto p = sequence({"X.", "X.", "X."});
    CHECK(run_self_consistency(kItem, p, 3, 0.9).answer == "X.");
  }
  SUBCASE("majority") {
    auto p = sequence({"B.", "A.", "a!", "B.", "The A."});
    const auto r = run_self_consistency(kItem, p, 5, 0.9);
    CHECK(r.answer == "A.");
    CHECK(r.n_effective == 5);
  }
  SUBCASE("tie goes to the earliest") {
    auto p = sequence({"A.", "B.", "B.", "A."});
    CHECK(run_self_consistency(kItem, p, 4, 0.9).answer == "A.");
  }
  SUBCASE("failed samples are dropped") {
    auto p = sequence({"FAIL", "B.", "FAIL"});
    const auto r = run_self_consistency(kItem, p, 3, 0.9);
    CHECK(r.answer == "B.");
    CHECK(r.n_effective == 1);
    auto dead = sequence({"FAIL"});
    CHECK_THROWS_AS(run_self_consistency(kItem, dead, 1, 0.9), BackendError);
  }
  auto p = sequence({"x."});
  CHECK_THROWS_AS(run_self_consistency(kItem, p, 0, 0.9), ValidationError);
}

TEST_CASE("best-of-n picks the highest mapped value") {
  ScriptedReward reward([](const RewardRequest& r) {
    if (r.answer_fragment == "Four.") return 4;
    if (r.answer_fragment == "One.") return 1;
    if (r.answer_fragment == "Three.") return 3;
    return 2;
  });
  SUBCASE("single") {
    auto p = sequence({"Two."});
    CHECK(run_best_of_n(kItem, p, reward, 1, 0.9).answer == "Two.");
  }
  SUBCASE("argmax") {
    auto p = sequence({"Four.", "One.", "Three."});
    CHECK(run_best_of_n(kItem, p, reward, 3, 0.9).answer == "One.");
  }
  SUBCASE("all equal") {
    auto p = sequence({"Two.", "Other.", "Else."});
    CHECK(run_best_of_n(kItem, p, reward, 3, 0.9).answer == "Two.");
  }
  SUBCASE("scoring failures are dropped") {
    ScriptedReward picky([](const RewardRequest& r) -> int {
      if (r.answer_fragment == "One.") throw ScoringError("bad", "");
      return 3;
    });
    auto p = sequence({"One.", "Three."});
    const auto r = run_best_of_n(kItem, p, picky, 2, 0.9);
    CHECK(r.answer == "Three.");
    CHECK(r.n_effective == 1);
  }
}

TEST_CASE("evaluate_method on an empty dataset") {
  auto p = sequence({"x."});
  WorldSpec spec;
  const auto world = FactWorld::generate(spec);
  WorldJudge judge(world);
  const auto r = evaluate_method({}, Method::direct, SearchConfig{}, {&p, nullptr, nullptr, &judge},
                                 EvalOptions{});
  CHECK(r.empty());
  CHECK_FALSE(r.accuracy.has_value());
  CHECK(r.to_json()["empty"] == true);
  CHECK(r.to_json()["accuracy"].is_null());
}

TEST_CASE("evaluate_method on a truthful world scores 1.0") {
  WorldSpec spec;
  spec.hallucination_rate = 0.0;
  spec.questions = 10;
  const auto world = FactWorld::generate(spec);
  WorldPolicy policy(world, 1);
  WorldReward reward(world);
  WorldJudge judge(world);
  HeuristicSwitch sw(world_risk_estimator(world), 0.0);
  const Backends b{&policy, &reward, &sw, &judge};
  EvalOptions eo;
  eo.samples = 3;
  eo.virtual_time = true;
  // Enough iterations that every search stops on a terminal answer.
  SearchConfig c;
  c.max_iterations = 200;
  for (auto m : all_methods()) {
    CAPTURE(to_string(m));
    const auto r = evaluate_method(world_items(world), m, c, b, eo);
    CHECK(r.accuracy.value() == 1.0);
    CHECK(r.errors == 0);
    CHECK(r.per_item.size() == 10);
    CHECK(r.mean_slow_step_ratio.has_value() == (m == Method::mcts));
    CHECK(r.mean_time > 0.0);
  }
}

TEST_CASE("per-item failures are recorded, reports stay in dataset order") {
  WorldSpec spec;
  spec.questions = 12;
  const auto world = FactWorld::generate(spec);
  WorldPolicy policy(world, 4);
  WorldReward reward(world);
  WorldJudge judge(world);
  auto items = world_items(world);
  items.insert(items.begin() + 3, QaItem{"bad", "Unknown question?", "x", "en"});
  EvalOptions eo;
  eo.jobs = 4;
  eo.virtual_time = true;
  const auto r = evaluate_method(items, Method::best_of_n, SearchConfig{},
                                 {&policy, &reward, nullptr, &judge}, eo);
  REQUIRE(r.per_item.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) CHECK(r.per_item[i].id == items[i].id);
  CHECK(r.errors == 1);
  CHECK(r.per_item[3].error.has_value());
  CHECK_FALSE(r.per_item[3].correct);

  // Aggregates are folds over the rows.
  auto copy = r;
  copy.aggregate();
  CHECK(copy.accuracy == r.accuracy);
  double correct = 0;
  for (const auto& row : r.per_item) correct += row.correct ? 1 : 0;
  CHECK(r.accuracy.value() == doctest::Approx(correct / items.size()));

  eo.jobs = 1;
  const auto serial = evaluate_method(items, Method::best_of_n, SearchConfig{},
                                      {&policy, &reward, nullptr, &judge}, eo);
  CHECK(serial.to_json() == r.to_json());
}

TEST_CASE("evaluate_method requires the models a method needs") {
  WorldSpec spec;
  const auto world = FactWorld::generate(spec);
  WorldPolicy policy(world, 1);
  WorldJudge judge(world);
  CHECK_THROWS_AS(evaluate_method({}, Method::best_of_n, SearchConfig{},
                                  {&policy, nullptr, nullptr, &judge}, {}),
                  ValidationError);
}

TEST_CASE("method names") {
  for (auto m : all_methods()) CHECK(method_from_string(to_string(m)) == m);
  CHECK(all_methods().size() == 5);
  CHECK_THROWS_AS(method_from_string("iti"), ValidationError);
}

TEST_CASE("dataset io") {
  testing::TempDir dir("ds");
  const std::vector<QaItem> items{{"a", "Q1?", "A1.", "en"}, {"b", "Q2?", "A2.", "zh"}};
  save_dataset(dir / "d.jsonl", items);
  const auto back = load_dataset(dir / "d.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[1].language_tag == "zh");
  CHECK(back[0].reference_answer == "A1.");
  std::ofstream(dir / "dup.jsonl") << to_json(items[0]).dump() << "\n" << to_json(items[0]).dump() << "\n";
  CHECK_THROWS_AS(load_dataset(dir / "dup.jsonl"), ValidationError);
  std::ofstream(dir / "bad.jsonl") << "{\"id\": 1}\n";
  CHECK_THROWS_AS(load_dataset(dir / "bad.jsonl"), ValidationError);
}

TEST_CASE("comparison table lists every report") {
  EvalReport a;
  a.method = Method::direct;
  a.per_item = {{"x", true, 1.0, std::nullopt, "", std::nullopt, std::nullopt}};
  a.aggregate();
  EvalReport b;
  b.method = Method::mcts;
  b.per_item = {{"x", false, 3.0, 0.5, "", std::nullopt, std::nullopt}};
  b.aggregate();
  const auto table = comparison_table({a, b}, {"direct", "mcts.gamma-4"});
  CHECK(table.find("mcts.gamma-4") != std::string::npos);
  CHECK(table.find("1.0000") != std::string::npos);
  const auto j = comparison_json({a, b}, {"direct", "mcts.gamma-4"});
  CHECK(j["rows"].size() == 2);
  CHECK(j["rows"][1]["slow_step_ratio"] == 0.5);
  CHECK(j["rows"][0]["slow_step_ratio"].is_null());
}
