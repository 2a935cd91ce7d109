#include <gtest/gtest.h>

#include "support.hpp"

using namespace spt;
using spt::testing::TreeShape;

namespace {

Trace tr(std::string_view s) { return parse_trace(s); }

const char* kFig1Uniform = "seq(par[0.5,0.5](xor[0.5,0.5](a,b), loop[0.5](c,tau)), d, xor[0.5,0.5](e,f))";

}  // namespace

TEST(ParseTree, Fig1UniformHasPlainFormQ1) {
  const auto t = parse_tree(kFig1Uniform);
  EXPECT_TRUE(is_stochastic(t));
  const auto want = make_sequence(std::vector<Tree>{
      make_parallel(std::vector<Tree>{make_choice(std::vector<Tree>{make_activity("a"), make_activity("b")}),
                                      make_loop(make_activity("c"), make_tau())}),
      make_activity("d"), make_choice(std::vector<Tree>{make_activity("e"), make_activity("f")})});
  EXPECT_EQ(strip(t), want);
  EXPECT_EQ(strip(t), read_tree(spt::testing::data("fig1.tree")));
  EXPECT_EQ(t, read_tree(spt::testing::data("fig1_uniform.tree")));
}

TEST(ParseTree, Leaves) {
  EXPECT_EQ(parse_tree("a"), make_activity("a"));
  EXPECT_EQ(parse_tree(" tau "), make_tau());
  // a keyword without an argument list is an ordinary activity
  EXPECT_EQ(parse_tree("seq"), make_activity("seq"));
}

TEST(ParseTree, RejectsBadProbabilities) {
  try {
    (void)parse_tree("xor[0.6,0.5](a,b)");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("probabilities sum to 1.1"), std::string::npos) << e.what();
  }
  EXPECT_THROW((void)parse_tree("xor[1.2,-0.2](a,b)"), Error);
  EXPECT_THROW((void)parse_tree("par[1,0](a,b)"), Error);
  EXPECT_THROW((void)parse_tree("loop[1.5](a,tau)"), Error);
  EXPECT_THROW((void)parse_tree("xor[0.5](a,b)"), Error);
}

TEST(ParseTree, RejectsBadStructure) {
  EXPECT_THROW((void)parse_tree("loop(a)"), Error);
  EXPECT_THROW((void)parse_tree("loop(a,b,c)"), Error);
  EXPECT_THROW((void)parse_tree("seq(a)"), Error);
  EXPECT_THROW((void)parse_tree("seq(a,b"), Error);
  EXPECT_THROW((void)parse_tree("seq(a,b) c"), Error);
  EXPECT_THROW((void)parse_tree(""), Error);
}

TEST(ParseTree, ErrorsReportTheColumn) {
  try {
    (void)parse_tree("seq(a,#)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("column 7"), std::string::npos) << e.what();
  }
}

TEST(ParseTree, MixedAnnotationIsRejected) {
  EXPECT_THROW((void)parse_tree("seq(xor[0.5,0.5](a,b),xor(c,d))"), Error);
}

TEST(FormatTree, CanonicalText) {
  EXPECT_EQ(format_tree(make_tau()), "tau");
  EXPECT_EQ(format_tree(make_loop(make_activity("a"), make_tau(), 0.4)), "loop[0.4](a,tau)");
  EXPECT_EQ(format_tree(parse_tree(kFig1Uniform)),
            "seq(par[0.5,0.5](xor[0.5,0.5](a,b),loop[0.5](c,tau)),d,xor[0.5,0.5](e,f))");
}

TEST(FormatTree, RoundTripsRandomTrees) {
  Rng rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const auto plain = spt::testing::random_plain_tree(rng, TreeShape{4, 3, 5});
    EXPECT_EQ(parse_tree(format_tree(plain)), plain);
    const auto spt = annotate(plain, InitPolicy::random, rng.next());
    EXPECT_EQ(parse_tree(format_tree(spt)), spt) << format_tree(spt);
  }
}

TEST(TreeToDot, LabelsArcsWithProbabilities) {
  const auto dot = tree_to_dot(parse_tree("loop[0.4](a,xor[0.25,0.75](b,c))"));
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("0.25"), std::string::npos);
  EXPECT_NE(dot.find("0.75"), std::string::npos);
}

TEST(Annotate, UniformPolicy) {
  const auto t = annotate(parse_tree("xor(a,b)"), InitPolicy::uniform);
  EXPECT_EQ(t.probs, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(annotate(parse_tree("loop(c,tau)"), InitPolicy::uniform).probs, std::vector<double>{0.5});
  EXPECT_EQ(annotate(parse_tree("xor(a,b,c)"), InitPolicy::uniform).probs.size(), 3u);
}

TEST(Annotate, RandomPolicyIsReproducibleAndValid) {
  const auto plain = read_tree(spt::testing::data("fig4_bpic13_open.tree"));
  const auto a = annotate(plain, InitPolicy::random, 99);
  const auto b = annotate(plain, InitPolicy::random, 99);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, annotate(plain, InitPolicy::random, 100));
  EXPECT_NO_THROW(validate(a, Annotation::stochastic));
  for_each_node(a, [](const Tree& n, std::size_t) {
    if (n.op == Op::loop) {
      EXPECT_GE(n.probs[0], 0.05);
      EXPECT_LE(n.probs[0], 0.95);
    }
  });
}

TEST(ParamCount, CountsFreeAndArcParameters) {
  EXPECT_EQ(param_count(parse_tree("seq(a,b,c)")), (ParamCount{0, 0}));
  EXPECT_EQ(param_count(parse_tree("par(xor(a,b),loop(c,tau))")).free, 3u);
  const auto fig4 = param_count(read_tree(spt::testing::data("fig4_bpic13_open.tree")));
  EXPECT_EQ(fig4.free, 9u);
  EXPECT_EQ(fig4.arcs, 18u);
}

TEST(PlainLanguage, Examples) {
  EXPECT_EQ(plain_language(parse_tree("xor(a,b)"), 5), (TraceSet{tr("a"), tr("b")}));
  EXPECT_EQ(plain_language(parse_tree("loop(c,tau)"), 3), (TraceSet{tr("c"), tr("c,c"), tr("c,c,c")}));
  const auto q1 = plain_language(read_tree(spt::testing::data("fig1.tree")), 4);
  EXPECT_TRUE(q1.count(tr("a,c,d,e")));
  EXPECT_TRUE(q1.count(tr("c,b,d,f")));
  EXPECT_FALSE(q1.count(tr("a,b,d,e")));
}

TEST(PlainLanguage, ContainsLogL1) {
  const auto lang = plain_language(read_tree(spt::testing::data("fig1.tree")), 6);
  const auto log = read_log(spt::testing::data("l1.txt"));
  for (const auto& [t, _] : log.entries()) EXPECT_TRUE(lang.count(t));
}

TEST(PlainLanguage, SilentLoopsTerminate) {
  EXPECT_EQ(plain_language(parse_tree("loop(tau,tau)"), 3), TraceSet{Trace{}});
  EXPECT_EQ(plain_language(parse_tree("loop(tau,a)"), 2), (TraceSet{Trace{}, tr("a"), tr("a,a")}));
}

TEST(PlainLanguage, NaryLoopEncodingMatchesUnrolledDefinition) {
  // loop(body, r1 | r2): every trace is b (r b)* with each r from {r1, r2}
  const auto lang = plain_language(parse_tree("loop(a,xor(b,seq(c,d)))"), 6);
  TraceSet want{tr("a")};
  TraceSet frontier{tr("a")};
  while (!frontier.empty()) {
    TraceSet next;
    for (const auto& t : frontier) {
      for (const auto& r : {tr("b"), tr("c,d")}) {
        auto u = concat(concat(t, r), tr("a"));
        if (u.size() <= 6) next.insert(u);
      }
    }
    want.insert(next.begin(), next.end());
    frontier = std::move(next);
  }
  EXPECT_EQ(lang, want);
}

TEST(PlainLanguage, MatchesSupportOfUniformExactLanguage) {
  Rng rng(77);
  const std::size_t K = 5;
  for (int k = 0; k < 150; ++k) {
    const auto plain = spt::testing::random_plain_tree(rng, TreeShape{3, 3, 3});
    TruncationConfig trunc;
    // enough loop rounds that no cut-off continuation has length <= K
    trunc.c_max = K + 2;
    trunc.max_length = K;
    StochasticLanguage l;
    try {
      l = exact_sl(annotate(plain, InitPolicy::uniform), trunc);
    } catch (const CapacityError&) {
      continue;
    }
    EXPECT_EQ(l.support(), plain_language(plain, K)) << format_tree(plain);
  }
}

TEST(Validate, ProbabilityToleranceIsEpsNorm) {
  EXPECT_NO_THROW((void)parse_tree("xor[0.3333333333333333,0.6666666666666666](a,b)"));
  EXPECT_THROW((void)parse_tree("xor[0.333333,0.666666](a,b)"), Error);
}
