#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "sensefit/reldisamb.hpp"

using namespace sensefit;
using fixtures::noun;

namespace {

SenseEmbeddingStore sense_store(const std::vector<std::pair<SenseID, Vector>>& rows) {
  EmbeddingStore t(rows.front().second.size());
  for (const auto& [id, v] : rows) t.add(id.key(), fixtures::unit(v));
  return SenseEmbeddingStore::from_normalized(t);
}

SenseInventory src_and_target(std::uint32_t target_senses) {
  SenseInventory inv;
  inv.add_sense({noun("src"), {}});
  for (std::uint32_t i = 1; i <= target_senses; ++i) inv.add_sense({noun("tgt", i), {}});
  return inv;
}

// n synonym relations, all resolved to t#1.
ResolutionMap gold_of(std::size_t n) {
  ResolutionMap m;
  for (std::size_t i = 0; i < n; ++i) m[RelationKey{RelationType::synonym, noun("s" + std::to_string(i)), "t"}] = noun("t", 1);
  return m;
}

}  // namespace

TEST(ExpandLemmaToSenses, CopiesAndSkips) {
  EmbeddingStore w(2);
  w.add("a", Vector{3, 4});
  w.add("b", Vector{0, 2});
  SenseInventory inv;
  for (std::uint32_t i = 1; i <= 3; ++i) inv.add_sense({noun("a", i), {}});
  inv.add_sense({noun("b"), {}});
  inv.add_sense({noun("c"), {}});
  inv.add_sense({noun("c", 2), {}});
  ExpandReport rep;
  log::ScopedCapture cap(log::Level::warn);
  auto s = expand_lemma_to_senses(w, inv, &rep);
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(rep.lemmas_embedded, 2u);
  EXPECT_EQ(rep.skipped_lemmas, (std::vector<std::string>{"c"}));
  for (std::uint32_t i = 1; i <= 3; ++i) {
    auto v = *s.lookup(noun("a", i));
    EXPECT_NEAR(v[0], 0.6, 1e-15);
    EXPECT_NEAR(v[1], 0.8, 1e-15);
  }
  EXPECT_FALSE(s.lookup(noun("c")));
  EXPECT_EQ(s.current, s.originals);
}

TEST(ExpandLemmaToSenses, KeyCountOnFixture) {
  auto f = fixtures::make_reldisamb_fixture();
  auto s = expand_lemma_to_senses(f.words, f.inventory);
  EXPECT_EQ(s.size(), f.inventory.sense_count());
}

TEST(SelectTargetSense, AttractAndRepel) {
  auto inv = src_and_target(2);
  auto s = sense_store({{noun("src"), {1, 0}}, {noun("tgt", 1), {1, 0}}, {noun("tgt", 2), {0, 1}}});
  EXPECT_EQ(select_target_sense(s, noun("src"), "tgt", Polarity::attract, inv), noun("tgt", 1));
  EXPECT_EQ(select_target_sense(s, noun("src"), "tgt", Polarity::repel, inv), noun("tgt", 2));
}

TEST(SelectTargetSense, MonosemousIgnoresPolarityAndVectors) {
  auto inv = src_and_target(1);
  auto s = sense_store({{noun("src"), {1, 0}}});
  EXPECT_EQ(select_target_sense(s, noun("src"), "tgt", Polarity::attract, inv), noun("tgt"));
  EXPECT_EQ(select_target_sense(s, noun("src"), "tgt", Polarity::repel, inv), noun("tgt"));
}

TEST(SelectTargetSense, TiesGoToLowestIndex) {
  auto inv = src_and_target(3);
  auto s = sense_store({{noun("src"), {1, 0}}, {noun("tgt", 1), {0, 1}}, {noun("tgt", 2), {1, 1}},
                        {noun("tgt", 3), {1, 1}}});
  EXPECT_EQ(select_target_sense(s, noun("src"), "tgt", Polarity::attract, inv), noun("tgt", 2));
  auto copies = sense_store({{noun("src"), {1, 0}}, {noun("tgt", 1), {1, 1}}, {noun("tgt", 2), {1, 1}},
                             {noun("tgt", 3), {1, 1}}});
  EXPECT_EQ(select_target_sense(copies, noun("src"), "tgt", Polarity::repel, inv), noun("tgt", 1));
}

TEST(SelectTargetSense, UnresolvableCases) {
  auto inv = src_and_target(2);
  auto no_targets = sense_store({{noun("src"), {1, 0}}});
  EXPECT_FALSE(select_target_sense(no_targets, noun("src"), "tgt", Polarity::attract, inv));
  auto no_source = sense_store({{noun("tgt", 1), {1, 0}}, {noun("tgt", 2), {0, 1}}});
  EXPECT_FALSE(select_target_sense(no_source, noun("src"), "tgt", Polarity::attract, inv));
  auto one_target = sense_store({{noun("src"), {1, 0}}, {noun("tgt", 2), {-1, 0}}});
  EXPECT_EQ(select_target_sense(one_target, noun("src"), "tgt", Polarity::attract, inv), noun("tgt", 2));
}

TEST(DisambiguateRelations, MonosemousTargetsConvergeImmediately) {
  SenseInventory inv;
  EmbeddingStore w(2);
  for (const char* l : {"a", "b", "c"}) {
    inv.add_sense({noun(l), {}});
    w.add(l, Vector{1, double(l[0] - 'a')});
  }
  inv.add_relation({RelationType::synonym, noun("a"), std::string("b")});
  inv.add_relation({RelationType::antonym, noun("a"), std::string("c")});
  inv.add_relation({RelationType::hyponym, noun("b"), noun("c")});
  auto [rels, run] = disambiguate_relations(w, inv, SenseFitConfig{}, DisambiguationRun{});
  EXPECT_EQ(run.trace, (std::vector<std::size_t>{0}));
  ASSERT_EQ(rels.size(), 2u);
  EXPECT_EQ(std::get<SenseID>(rels[0].target), noun("b"));
  EXPECT_EQ(std::get<SenseID>(rels[1].target), noun("c"));
  for (const auto& [k, r] : run.resolved) EXPECT_EQ(r.epoch, 0u);
}

TEST(DisambiguateRelations, NoOptimizerEpochsRecoversPlantedGold) {
  // Each source is strictly closest to exactly one sense of its target.
  SenseInventory inv;
  std::vector<std::pair<SenseID, Vector>> rows;
  ResolutionMap gold;
  const std::size_t dim = 6;
  for (std::uint32_t i = 1; i <= 3; ++i) inv.add_sense({noun("t", i), {}});
  for (std::uint32_t i = 1; i <= 3; ++i) {
    Vector e(dim, 0.0);
    e[i - 1] = 1.0;
    rows.push_back({noun("t", i), e});
  }
  for (std::uint32_t s = 0; s < 6; ++s) {
    auto src = noun("s" + std::to_string(s));
    inv.add_sense({src, {}});
    Vector v(dim, 0.1);
    std::uint32_t want = 1 + s % 3;
    v[want - 1] = 1.0;
    RelationType type = s < 3 ? RelationType::synonym : RelationType::hypernym;
    if (s == 5) {
      type = RelationType::antonym;
      v[want - 1] = -1.0;
    }
    rows.push_back({src, v});
    Relation r{type, src, std::string("t")};
    inv.add_relation(r);
    gold[key_of(r)] = noun("t", want);
  }
  DisambiguationRun run;
  run.optimizer_epochs = 0;
  auto [rels, out] = disambiguate_relations(sense_store(rows), inv, SenseFitConfig{}, run);
  EXPECT_EQ(to_resolution_map(out), gold);
  EXPECT_EQ(out.trace, (std::vector<std::size_t>{6, 0}));
  auto scores = evaluate_disambiguation(to_resolution_map(out), gold);
  EXPECT_EQ(scores.overall.f1, 1.0);
}

TEST(DisambiguateRelations, ResolutionsBelongToTargetLemma) {
  auto f = fixtures::make_reldisamb_fixture(12);
  for (auto plan : {BatchPlan::two_batch, BatchPlan::single_batch}) {
    DisambiguationRun run;
    run.plan = plan;
    auto [rels, out] = disambiguate_relations(f.words, f.inventory, SenseFitConfig{}, run);
    std::size_t ambiguous = 0;
    for (const auto& r : f.inventory.relations()) ambiguous += r.ambiguous();
    EXPECT_EQ(rels.size(), ambiguous);
    for (const auto& [k, r] : out.resolved) EXPECT_EQ(r.target.lemma, k.target_lemma);
    // The loop stops at the first quiet iteration or at the epoch limit.
    ASSERT_FALSE(out.trace.empty());
    EXPECT_LE(out.trace.size(), run.epochs);
    for (std::size_t i = 0; i + 1 < out.trace.size(); ++i) EXPECT_GT(out.trace[i], 0u);
    if (out.trace.size() < run.epochs) {
      EXPECT_EQ(out.trace.back(), 0u);
    }
  }
}

TEST(DisambiguateRelations, DeterministicAcrossRuns) {
  auto f = fixtures::make_reldisamb_fixture(13);
  auto a = disambiguate_relations(f.words, f.inventory, SenseFitConfig{}, DisambiguationRun{});
  auto b = disambiguate_relations(f.words, f.inventory, SenseFitConfig{}, DisambiguationRun{});
  EXPECT_EQ(to_resolution_map(a.second), to_resolution_map(b.second));
  EXPECT_EQ(a.second.trace, b.second.trace);
  EXPECT_EQ(format_resolutions(f.inventory, a.second), format_resolutions(f.inventory, b.second));
}

TEST(DisambiguateRelations, SymmetricFixtureScoresHigh) {
  auto f = fixtures::make_reldisamb_fixture(14);
  auto [rels, run] = disambiguate_relations(f.words, f.inventory, SenseFitConfig{}, DisambiguationRun{});
  auto scores = evaluate_disambiguation(to_resolution_map(run), f.gold);
  for (auto t : kAllRelationTypes) {
    ASSERT_GT(scores[t].total, 0u) << relation_name(t);
    EXPECT_GE(*scores[t].f1, 0.9) << relation_name(t);
  }
}

TEST(DisambiguateRelations, RejectsZeroEpochs) {
  auto f = fixtures::make_reldisamb_fixture();
  DisambiguationRun run;
  run.epochs = 0;
  EXPECT_THROW(disambiguate_relations(f.words, f.inventory, SenseFitConfig{}, run), std::invalid_argument);
}

TEST(ApplyResolutions, RewritesResolvedRelations) {
  auto f = fixtures::make_reldisamb_fixture();
  auto [rels, run] = disambiguate_relations(f.words, f.inventory, SenseFitConfig{}, DisambiguationRun{});
  auto out = apply_resolutions(f.inventory, run);
  ASSERT_EQ(out.relations().size(), f.inventory.relations().size());
  EXPECT_EQ(out.all_senses(), f.inventory.all_senses());
  for (std::size_t i = 0; i < out.relations().size(); ++i) {
    const auto& before = f.inventory.relations()[i];
    const auto& after = out.relations()[i];
    EXPECT_EQ(after.type, before.type);
    EXPECT_EQ(after.source, before.source);
    EXPECT_EQ(after.target_lemma(), before.target_lemma());
    EXPECT_EQ(after.ambiguous(), !run.resolved.contains(key_of(before)) && before.ambiguous());
  }
}

TEST(ResolutionFiles, FormatAndParse) {
  auto inv = src_and_target(2);
  inv.add_sense({noun("x"), {}});
  inv.add_relation({RelationType::synonym, noun("src"), std::string("tgt")});
  inv.add_relation({RelationType::antonym, noun("src"), std::string("x")});
  inv.add_relation({RelationType::hyponym, noun("x"), std::string("tgt")});
  inv.add_relation({RelationType::hypernym, noun("x"), noun("src")});
  DisambiguationRun run;
  run.resolved[key_of(inv.relations()[0])] = {noun("tgt", 2), 3};
  run.resolved[key_of(inv.relations()[1])] = {noun("x"), 0};
  auto text = format_resolutions(inv, run);
  EXPECT_EQ(text,
            "R\tsynonym\tsrc#noun#1\ttgt#noun#2\t3\n"
            "R\tantonym\tsrc#noun#1\tx#noun#1\t0\n"
            "R\thyponym\tx#noun#1\ttgt\tNA\n");
  std::istringstream in(text);
  auto parsed = parse_resolutions(in);
  EXPECT_EQ(parsed, to_resolution_map(run));
  std::istringstream gold_in(format_resolution_map(parsed));
  EXPECT_EQ(parse_resolutions(gold_in), parsed);
}

TEST(ResolutionFiles, MalformedLines) {
  for (const char* text : {"R\tsynonym\tsrc#noun#1\n", "X\tsynonym\ta#noun#1\tb#noun#1\n",
                           "R\tcousin\ta#noun#1\tb#noun#1\n", "R\tsynonym\ta\tb#noun#1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_resolutions(in), ParseError) << text;
  }
}

TEST(EvaluateDisambiguation, AllCorrect) {
  auto gold = gold_of(10);
  auto s = evaluate_disambiguation(gold, gold);
  EXPECT_EQ(s.overall.precision, 1.0);
  EXPECT_EQ(s.overall.recall, 1.0);
  EXPECT_EQ(s.overall.f1, 1.0);
  EXPECT_EQ(s[RelationType::synonym].total, 10u);
  EXPECT_FALSE(s[RelationType::antonym].f1);
}

TEST(EvaluateDisambiguation, PartialCoverage) {
  auto gold = gold_of(10);
  ResolutionMap pred;
  std::size_t i = 0;
  for (const auto& [k, v] : gold) {
    if (i < 6) pred[k] = v;
    else if (i < 8) pred[k] = noun("t", 2);
    ++i;
  }
  pred[RelationKey{RelationType::antonym, noun("zz"), "t"}] = noun("t", 1);  // not in gold
  auto s = evaluate_disambiguation(pred, gold);
  EXPECT_EQ(s.overall.precision, 0.75);
  EXPECT_EQ(s.overall.recall, 0.6);
  EXPECT_NEAR(*s.overall.f1, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(s[RelationType::antonym].total, 0u);
}

TEST(EvaluateDisambiguation, NothingResolvedAndEmptyGold) {
  auto s = evaluate_disambiguation({}, gold_of(10));
  EXPECT_FALSE(s.overall.precision);
  EXPECT_EQ(s.overall.recall, 0.0);
  EXPECT_EQ(s.overall.f1, 0.0);
  auto empty = evaluate_disambiguation(gold_of(3), {});
  EXPECT_FALSE(empty.overall.precision);
  EXPECT_FALSE(empty.overall.recall);
  EXPECT_FALSE(empty.overall.f1);
}
