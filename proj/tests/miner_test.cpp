#include <gtest/gtest.h>

#include "support.hpp"

using namespace spt;

namespace {

Trace tr(std::string_view s) { return parse_trace(s); }

EventLog log_of(std::string_view text) { return parse_log(text, LogFormat::trace_list); }

}  // namespace

TEST(Dfg, CountsEdgesStartsAndEnds) {
  const auto g = build_dfg(log_of("a,b,c x2\na,c"));
  EXPECT_EQ(g.nodes, (std::set<Activity>{"a", "b", "c"}));
  EXPECT_EQ(g.edge_count("a", "b"), 2u);
  EXPECT_EQ(g.edge_count("b", "c"), 2u);
  EXPECT_EQ(g.edge_count("a", "c"), 1u);
  EXPECT_FALSE(g.has_edge("c", "a"));
  EXPECT_EQ(g.start_activities.at("a"), 3u);
  EXPECT_EQ(g.end_activities.at("c"), 3u);
  EXPECT_EQ(g.edges.size(), 3u);
}

TEST(Dfg, SelfLoops) {
  const auto g = build_dfg(log_of("a,a,a"));
  EXPECT_EQ(g.edge_count("a", "a"), 2u);
}

TEST(Discover, Sequence) { EXPECT_EQ(discover(log_of("a,b x3")), parse_tree("seq(a,b)")); }

TEST(Discover, Choice) { EXPECT_EQ(discover(log_of("a\nb")), parse_tree("xor(a,b)")); }

TEST(Discover, Parallel) { EXPECT_EQ(discover(log_of("a,b\nb,a")), parse_tree("par(a,b)")); }

TEST(Discover, LoopOfSingleActivity) {
  EXPECT_EQ(discover(log_of("a\na,a,a")), parse_tree("loop(a,tau)"));
  EXPECT_EQ(discover(log_of("a x4")), parse_tree("a"));
}

TEST(Discover, LoopWithRedo) { EXPECT_EQ(discover(log_of("a\na,b,a\na,b,a,b,a")), parse_tree("loop(a,b)")); }

TEST(Discover, OptionalPart) {
  const auto t = discover(log_of("a,b\na"));
  EXPECT_EQ(t, parse_tree("seq(a,xor(tau,b))"));
}

TEST(Discover, L1FitsAndIsDeterministic) {
  const auto log = read_log(spt::testing::data("l1.txt"));
  const auto t = discover(log);
  EXPECT_TRUE(verify_fitness(t, log)) << format_tree(t);
  EXPECT_EQ(discover(log), t);
  EXPECT_THROW((void)discover(EventLog{}), ValidationError);
}

TEST(Discover, FlowerFallThrough) {
  // no cut separates these: every activity follows every other
  const auto log = log_of("a,b,c,a\nc,b,a,c\nb,a,c,b");
  const auto t = discover(log);
  EXPECT_TRUE(verify_fitness(t, log)) << format_tree(t);
}

TEST(Discover, FitnessOnRandomLogs) {
  Rng rng(17);
  for (int k = 0; k < 200; ++k) {
    const auto log = spt::testing::random_log(rng, 1 + rng.below(5), 8, 1 + rng.below(12));
    const auto t = discover(log);
    EXPECT_NO_THROW(validate(t, Annotation::plain));
    EXPECT_TRUE(verify_fitness(t, log)) << format_tree(t);
    EXPECT_EQ(discover(log), t);
  }
}

TEST(Discover, FitnessAgainstBoundedTreeLanguage) {
  // membership checked directly on the tree semantics, without the net
  Rng rng(18);
  for (int k = 0; k < 100; ++k) {
    const auto log = spt::testing::random_log(rng, 1 + rng.below(3), 4, 1 + rng.below(6));
    const auto t = discover(log);
    const auto lang = plain_language(t, log.max_trace_length());
    for (const auto& [trace, _] : log.entries()) EXPECT_TRUE(lang.count(trace)) << format_tree(t) << " " << format_trace(trace);
  }
}

TEST(VerifyFitness, Fig1AndL1) {
  const auto log = read_log(spt::testing::data("l1.txt"));
  EXPECT_TRUE(verify_fitness(read_tree(spt::testing::data("fig1.tree")), log));
  EXPECT_TRUE(verify_fitness(read_tree(spt::testing::data("fig1_uniform.tree")), log));
  EXPECT_FALSE(verify_fitness(parse_tree("seq(a,b)"), log));
  EventLog extra = log;
  extra.add(tr("a,b,d,e"));
  EXPECT_FALSE(verify_fitness(read_tree(spt::testing::data("fig1.tree")), extra));
}

TEST(Project, KeepsOrder) {
  EXPECT_EQ(detail::project(tr("a,b,c,a"), {"a", "c"}), tr("a,c,a"));
  EXPECT_EQ(detail::project(tr("b"), {"a"}), Trace{});
}
