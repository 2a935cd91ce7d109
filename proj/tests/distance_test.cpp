#include <gtest/gtest.h>

#include "support.hpp"

using namespace spt;

namespace {

Trace tr(std::string_view s) { return parse_trace(s); }

Trace random_trace(Rng& rng, std::size_t alphabet, std::size_t max_len) {
  Trace t;
  for (std::size_t k = rng.below(max_len + 1); k > 0; --k) t.push_back(std::string(1, static_cast<char>('a' + rng.below(alphabet))));
  return t;
}

StochasticLanguage lang(std::initializer_list<std::pair<const char*, double>> entries) {
  StochasticLanguage l;
  for (const auto& [t, p] : entries) l.add(tr(t), p);
  return l;
}

StochasticLanguage random_language(Rng& rng, std::size_t size) {
  StochasticLanguage l;
  std::vector<double> w;
  std::vector<Trace> traces;
  while (traces.size() < size) {
    auto t = random_trace(rng, 3, 4);
    if (std::find(traces.begin(), traces.end(), t) == traces.end()) traces.push_back(t);
  }
  const auto p = rng.simplex(size);
  for (std::size_t i = 0; i < size; ++i) l.add(traces[i], p[i]);
  return l;
}

}  // namespace

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein(tr("a,b,c"), tr("a,c")), 1u);
  EXPECT_EQ(levenshtein(Trace{}, tr("a,b")), 2u);
  EXPECT_EQ(levenshtein(tr("a,b"), tr("b,a")), 2u);
  EXPECT_DOUBLE_EQ(levenshtein_norm(tr("a,b,c,d"), tr("a,b,c,e")), 0.25);
  EXPECT_EQ(levenshtein_norm(Trace{}, Trace{}), 0.0);
  EXPECT_EQ(levenshtein_norm(Trace{}, tr("a")), 1.0);
}

TEST(Levenshtein, MetricPropertiesOnRandomTriples) {
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const auto x = random_trace(rng, 3, 6), y = random_trace(rng, 3, 6), z = random_trace(rng, 3, 6);
    const auto dxy = levenshtein(x, y), dyz = levenshtein(y, z), dxz = levenshtein(x, z);
    EXPECT_EQ(dxy, levenshtein(y, x));
    EXPECT_EQ(dxy == 0, x == y);
    EXPECT_LE(dxz, dxy + dyz);
    const auto n = levenshtein_norm(x, y);
    EXPECT_GE(n, 0.0);
    EXPECT_LE(n, 1.0);
  }
}

TEST(Transport, MatchesIntegralEnumeration) {
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const std::size_t m = 1 + rng.below(5), n = 1 + rng.below(5);
    std::vector<int> supply(m), demand(n, 0);
    int total = 0;
    for (auto& s : supply) total += (s = static_cast<int>(rng.below(4)));
    if (total == 0) supply[0] = total = 1;
    for (int unit = 0; unit < total; ++unit) ++demand[rng.below(n)];
    CostMatrix c(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c(i, j) = static_cast<double>(rng.below(10)) / 9.0;
    std::vector<double> a, b;
    for (int s : supply) a.push_back(static_cast<double>(s) / total);
    for (int d : demand) b.push_back(static_cast<double>(d) / total);
    const auto plan = solve_transport(a, b, c);
    EXPECT_NEAR(plan.objective, spt::testing::brute_transport(supply, demand, c) / total, 1e-9);
    EXPECT_TRUE(certify_optimal(plan, a, b, c));
  }
}

TEST(Transport, CertificateOnLargerRandomInstances) {
  Rng rng(3);
  for (int k = 0; k < 30; ++k) {
    const std::size_t m = 2 + rng.below(30), n = 2 + rng.below(30);
    const auto a = rng.simplex(m);
    auto b = rng.simplex(n);
    CostMatrix c(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c(i, j) = rng.uniform();
    const auto plan = solve_transport(a, b, c);
    EXPECT_TRUE(certify_optimal(plan, a, b, c, 1e-9));
    double obj = 0;
    for (const auto& f : plan.flows) obj += f.mass * c(f.from, f.to);
    EXPECT_NEAR(obj, plan.objective, 1e-12);
  }
}

TEST(Transport, RejectsBadInput) {
  CostMatrix c(1, 1);
  const std::vector<double> one{1.0}, half{0.5}, neg{-1.0};
  EXPECT_THROW((void)solve_transport(one, half, c), ValidationError);
  EXPECT_THROW((void)solve_transport(neg, neg, c), ValidationError);
  CostMatrix wrong(2, 1);
  EXPECT_THROW((void)solve_transport(one, one, wrong), ValidationError);
}

TEST(Transport, CertificateRejectsSuboptimalPlan) {
  CostMatrix c(2, 2);
  c(0, 1) = c(1, 0) = 1;
  const std::vector<double> a{0.5, 0.5}, b{0.5, 0.5};
  auto plan = solve_transport(a, b, c);
  EXPECT_DOUBLE_EQ(plan.objective, 0.0);
  TransportPlan crossed{{{0, 1, 0.5}, {1, 0, 0.5}}, 1.0, {0, 0}, {0, 0}, 0};
  EXPECT_FALSE(certify_optimal(crossed, a, b, c));
}

TEST(Emd, IdentitySymmetryAndBounds) {
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const auto l1 = random_language(rng, 1 + rng.below(6));
    const auto l2 = random_language(rng, 1 + rng.below(6));
    EXPECT_NEAR(emd(l1, l1), 0.0, 1e-12);
    EXPECT_NEAR(emd(l1, l2), emd(l2, l1), 1e-9);
    EXPECT_GE(emd(l1, l2), -1e-12);
    EXPECT_LE(emd(l1, l2), 1.0 + 1e-12);
    // moving all mass is never cheaper than the total variation bound allows
    EXPECT_LE(emd(l1, l2), total_variation(l1, l2) + 1e-9);
  }
}

TEST(Emd, WorkedValue) {
  const auto l1 = lang({{"a,b", 0.5}, {"a,c", 0.5}});
  const auto l2 = lang({{"a,b", 1.0}});
  EXPECT_DOUBLE_EQ(emd(l1, l2), 0.25);
  EXPECT_DOUBLE_EQ(emd(l1, l2, GroundDistance::raw), 0.5);
}

TEST(Emd, RequiresCompleteLanguages) {
  auto l = lang({{"a", 0.5}});
  l.mass_deficit = 0.5;
  EXPECT_THROW((void)emd(l, lang({{"a", 1.0}})), ValidationError);
}

TEST(Remd, IdenticalLanguagesGiveZero) {
  const auto log = log_to_sl(read_log(spt::testing::data("l1.txt")));
  EXPECT_NEAR(remd(log, log), 0.0, 1e-12);
  EXPECT_NEAR(remd(log, log, RemdVariant::renormalize), 0.0, 1e-12);
}

TEST(Remd, ChoiceToy) {
  const auto log = log_to_sl(read_log(spt::testing::data("choice_toy.txt")));
  const auto model = exact_sl(annotate(read_tree(spt::testing::data("choice_toy.tree")), InitPolicy::uniform));
  EXPECT_NEAR(remd(log, model), 0.25, 1e-12);
}

TEST(Remd, MassOutsideTheLogIsPenalizedOrRescaled) {
  const auto log = lang({{"a", 1.0}});
  auto model = lang({{"a", 0.6}, {"b", 0.3}});
  model.mass_deficit = 0.1;
  EXPECT_NEAR(remd(log, model), 0.4, 1e-12);
  EXPECT_NEAR(remd(log, model, RemdVariant::renormalize), 0.0, 1e-12);
  EXPECT_NEAR(remd(log, lang({{"b", 1.0}})), 1.0, 1e-12);
  EXPECT_THROW((void)remd(log, lang({{"b", 1.0}}), RemdVariant::renormalize), ValidationError);
}

TEST(Remd, ResidualPlanShape) {
  const auto log = lang({{"a", 0.5}, {"b", 0.5}});
  const RestrictedEmd d(log);
  const auto r = d.evaluate(lang({{"a", 0.5}, {"c", 0.5}}));
  EXPECT_TRUE(r.residual);
  EXPECT_EQ(r.to.size(), 1u);
  EXPECT_NEAR(r.distance, 0.5, 1e-12);
}

TEST(Remd, AgreesWithEmdWhenSupportsCoincide) {
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    const auto l1 = random_language(rng, 1 + rng.below(5));
    StochasticLanguage l2;
    const auto p = rng.simplex(l1.size());
    std::size_t i = 0;
    for (const auto& [t, _] : l1.probs) l2.add(t, p[i++]);
    EXPECT_NEAR(remd(l1, l2), emd(l1, l2), 1e-9);
  }
}

TEST(TotalVariation, Examples) {
  EXPECT_DOUBLE_EQ(total_variation(lang({{"a", 1.0}}), lang({{"b", 1.0}})), 1.0);
  EXPECT_DOUBLE_EQ(total_variation(lang({{"a", 0.5}, {"b", 0.5}}), lang({{"a", 1.0}})), 0.5);
}
