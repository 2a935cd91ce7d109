#pragma once

// Random generators and brute-force reference implementations shared by the
// test suites. The oracles deliberately follow the definitions literally
// (enumerate every derivation or schedule) and share no code with the library
// evaluators beyond the data types.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "spt/spt.hpp"

namespace spt::testing {

using Rational = boost::multiprecision::cpp_rational;

inline Rational q(long num, long den = 1) { return Rational(num, den); }

inline std::vector<Activity> letters(std::size_t n) {
  std::vector<Activity> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('a' + i)));
  return out;
}

struct TreeShape {
  std::size_t max_depth = 3;
  std::size_t max_arity = 3;
  std::size_t alphabet = 4;
  double leaf_weight = 0.35;
  double tau_weight = 0.15;
};

/// Random plain tree; operators are drawn uniformly, leaves more likely with depth.
inline Tree random_plain_tree(Rng& rng, const TreeShape& shape, std::size_t depth = 0) {
  const auto alphabet = letters(shape.alphabet);
  const double leaf_p = depth >= shape.max_depth ? 1.0 : shape.leaf_weight + 0.15 * static_cast<double>(depth);
  if (rng.uniform() < leaf_p) {
    if (rng.uniform() < shape.tau_weight) return make_tau();
    return make_activity(alphabet[rng.below(alphabet.size())]);
  }
  const auto kind = rng.below(4);
  if (kind == 3) return make_loop(random_plain_tree(rng, shape, depth + 1), random_plain_tree(rng, shape, depth + 1));
  const std::size_t n = 2 + rng.below(shape.max_arity - 1);
  std::vector<Tree> children;
  for (std::size_t i = 0; i < n; ++i) children.push_back(random_plain_tree(rng, shape, depth + 1));
  if (kind == 0) return make_sequence(std::move(children));
  if (kind == 1) return make_choice(std::move(children));
  return make_parallel(std::move(children));
}

inline Tree random_spt(Rng& rng, const TreeShape& shape) {
  return annotate(random_plain_tree(rng, shape), InitPolicy::random, rng.next());
}

inline EventLog random_log(Rng& rng, std::size_t alphabet, std::size_t max_len, std::size_t traces) {
  const auto sigma = letters(alphabet);
  EventLog log;
  for (std::size_t k = 0; k < traces; ++k) {
    Trace t;
    const auto len = 1 + rng.below(max_len);
    for (std::size_t i = 0; i < len; ++i) t.push_back(sigma[rng.below(sigma.size())]);
    log.add(t, 1 + rng.below(3));
  }
  return log;
}

// --- shuffle oracle --------------------------------------------------------

/// Sum over every schedule s in {1..n}^|target| of the product of
/// p_{s[k]} / sum of p_i over unconsumed traces, counting only the schedules
/// that respect the trace lengths and reproduce the target.
template <class P>
P brute_shuffle(const std::vector<Trace>& traces, const std::vector<P>& probs, const Trace& target) {
  const std::size_t n = traces.size();
  std::size_t total = 0;
  for (const auto& t : traces) total += t.size();
  if (total != target.size()) return P(0);
  std::vector<std::size_t> schedule(target.size(), 0);
  P sum = 0;
  while (true) {
    std::vector<std::size_t> used(n, 0);
    bool ok = true;
    P prob = 1;
    for (std::size_t k = 0; k < schedule.size() && ok; ++k) {
      const auto j = schedule[k];
      if (used[j] >= traces[j].size() || traces[j][used[j]] != target[k]) {
        ok = false;
        break;
      }
      P active = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (used[i] < traces[i].size()) active += probs[i];
      prob *= probs[j] / active;
      ++used[j];
    }
    if (ok) sum += prob;
    // next schedule in lexicographic order
    std::size_t k = schedule.size();
    while (k > 0 && schedule[k - 1] + 1 == n) schedule[--k] = 0;
    if (k == 0) break;
    ++schedule[k - 1];
  }
  if (target.empty()) return P(1);
  return sum;
}

// --- language oracle -------------------------------------------------------

template <class P>
using Derivations = std::vector<std::pair<Trace, P>>;

/// Every derivation of the tree with at most c_max body executions per loop,
/// listed separately (no merging), with its probability.
template <class P>
Derivations<P> brute_derivations(const BasicTree<P>& t, std::size_t c_max) {
  switch (t.op) {
    case Op::activity:
      return {{Trace{t.label}, P(1)}};
    case Op::tau:
      return {{Trace{}, P(1)}};
    case Op::sequence: {
      Derivations<P> acc{{Trace{}, P(1)}};
      for (const auto& c : t.children) {
        Derivations<P> next;
        for (const auto& [x, px] : acc)
          for (const auto& [y, py] : brute_derivations(c, c_max)) next.push_back({concat(x, y), px * py});
        acc = std::move(next);
      }
      return acc;
    }
    case Op::choice: {
      Derivations<P> out;
      for (std::size_t i = 0; i < t.children.size(); ++i) {
        if (t.probs[i] == P(0)) continue;
        for (const auto& [x, px] : brute_derivations(t.children[i], c_max)) out.push_back({x, t.probs[i] * px});
      }
      return out;
    }
    case Op::parallel: {
      // all combinations of child derivations, then all interleavings of the picked traces
      std::vector<Derivations<P>> kids;
      for (const auto& c : t.children) kids.push_back(brute_derivations(c, c_max));
      Derivations<P> out;
      std::vector<std::size_t> pick(kids.size(), 0);
      std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == kids.size()) {
          std::vector<Trace> traces;
          P weight = 1;
          for (std::size_t k = 0; k < kids.size(); ++k) {
            traces.push_back(kids[k][pick[k]].first);
            weight *= kids[k][pick[k]].second;
          }
          TraceSet candidates{Trace{}};
          for (const auto& tr : traces) candidates = interleave_sets(candidates, TraceSet{tr});
          for (const auto& w : candidates) {
            const P s = brute_shuffle(traces, t.probs, w);
            if (s != P(0)) out.push_back({w, weight * s});
          }
          return;
        }
        for (pick[i] = 0; pick[i] < kids[i].size(); ++pick[i]) rec(i + 1);
      };
      rec(0);
      return out;
    }
    case Op::loop: {
      const P p = t.probs[0];
      const auto body = brute_derivations(t.children[0], c_max);
      const auto redo = brute_derivations(t.children[1], c_max);
      Derivations<P> out;
      Derivations<P> runs = body;  // m executions, without the stop factor
      P pk = 1;                    // p^(m-1)
      for (std::size_t m = 1; m <= c_max; ++m) {
        for (const auto& [x, px] : runs) out.push_back({x, px * pk * (P(1) - p)});
        if (m == c_max) break;
        Derivations<P> next;
        for (const auto& [x, px] : runs)
          for (const auto& [r, pr] : redo)
            for (const auto& [b, pb] : body) next.push_back({concat(concat(x, r), b), px * pr * pb});
        runs = std::move(next);
        pk *= p;
      }
      return out;
    }
  }
  return {};
}

template <class P>
BasicLanguage<P> brute_language(const BasicTree<P>& t, std::size_t c_max) {
  BasicLanguage<P> out;
  P total = 0;
  for (const auto& [x, px] : brute_derivations(t, c_max)) {
    if (px == P(0)) continue;
    out.probs[x] += px;
    total += px;
  }
  out.mass_deficit = P(1) - total;
  return out;
}

// --- transport oracle ------------------------------------------------------

/// Minimum transport cost for integer supplies and demands by enumerating every
/// integral plan (integral optima exist since the constraint matrix is totally unimodular).
inline double brute_transport(const std::vector<int>& supply, const std::vector<int>& demand, const CostMatrix& cost) {
  const std::size_t m = supply.size(), n = demand.size();
  std::vector<int> row = supply, col = demand;
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double)> rec = [&](std::size_t cell, double acc) {
    if (acc >= best) return;
    if (cell == m * n) {
      best = acc;
      return;
    }
    const auto i = cell / n, j = cell % n;
    // the last row and the last column must take whatever is left
    int lo = 0;
    const int hi = std::min(row[i], col[j]);
    if (i + 1 == m) lo = std::max(lo, col[j]);
    if (j + 1 == n) lo = std::max(lo, row[i]);
    for (int x = lo; x <= hi; ++x) {
      row[i] -= x;
      col[j] -= x;
      rec(cell + 1, acc + x * cost(i, j));
      row[i] += x;
      col[j] += x;
    }
  };
  rec(0, 0.0);
  return best;
}

inline std::string data(const std::string& name) { return std::string(SPT_DATA_DIR) + "/" + name; }

}  // namespace spt::testing
