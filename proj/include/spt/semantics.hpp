#pragma once

// Stochastic language of a stochastic process tree: the shuffle kernel,
// truncated exact evaluation and Monte-Carlo sampling.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "spt/corelang.hpp"
#include "spt/error.hpp"
#include "spt/random.hpp"
#include "spt/tree.hpp"

namespace spt {

/// Probability that the stochastic shuffle of `traces` with branch weights
/// `probs` yields `target`. At every position the next source is picked among
/// the traces that still have letters, with weights renormalized over them.
template <class P>
P shuffle_probability(const std::vector<Trace>& traces, const std::vector<P>& probs, const Trace& target) {
  if (traces.size() != probs.size()) throw ValidationError("shuffle: traces and probabilities differ in length");
  std::size_t total = 0;
  for (const auto& t : traces) total += t.size();
  if (total != target.size()) throw ValidationError("shuffle: source lengths do not add up to the target length");
  P sum{0};
  for (const auto& p : probs) sum += p;
  if (!detail::close_to(sum, P{1}, kNormTolerance)) throw ValidationError("shuffle: probabilities do not sum to 1");

  std::map<std::vector<std::size_t>, P> memo;
  std::vector<std::size_t> pos(traces.size(), 0);
  std::function<P(std::size_t)> go = [&](std::size_t k) -> P {
    if (k == target.size()) return P{1};
    auto it = memo.find(pos);
    if (it != memo.end()) return it->second;
    P denom{0};
    for (std::size_t i = 0; i < traces.size(); ++i)
      if (pos[i] < traces[i].size()) denom += probs[i];
    P result{0};
    for (std::size_t j = 0; j < traces.size(); ++j) {
      if (pos[j] >= traces[j].size() || traces[j][pos[j]] != target[k]) continue;
      ++pos[j];
      const P rest = go(k + 1);
      --pos[j];
      result += probs[j] / denom * rest;
    }
    memo.emplace(pos, result);
    return result;
  };
  return go(0);
}

/// Bounds for the truncated evaluation of a tree's language.
struct TruncationConfig {
  /// Maximal number of body executions for every loop.
  std::size_t c_max = 8;
  /// Per-loop overrides keyed by the loop's preorder index (see loop_indices).
  std::map<std::size_t, std::size_t> per_loop;
  /// Entries below this probability are dropped into the deficit.
  double mass_floor = 0;
  /// Maximal number of entries of any intermediate language.
  std::size_t entry_cap = 1'000'000;
  /// Maximal number of elementary steps (trace products and shuffle moves).
  std::size_t work_cap = 50'000'000;
  /// Drop every trace longer than this.
  std::optional<std::size_t> max_length;
  /// When non-empty, keep only traces that are (scattered) subsequences of one
  /// of these. Every intermediate trace of a tree is a subsequence of the final
  /// trace, so this prunes early without changing the probabilities of the
  /// listed traces.
  std::vector<Trace> superseqs;

  std::size_t bound_for(std::size_t loop_index) const {
    auto it = per_loop.find(loop_index);
    return it == per_loop.end() ? c_max : it->second;
  }
};

namespace detail {

/// Incremental subsequence/length filter derived from a TruncationConfig.
class TraceFilter {
 public:
  using State = std::vector<std::size_t>;
  static constexpr std::size_t kDead = std::numeric_limits<std::size_t>::max();

  explicit TraceFilter(const TruncationConfig& cfg) : superseqs_(cfg.superseqs) {
    if (cfg.max_length) max_length_ = *cfg.max_length;
    if (!superseqs_.empty()) {
      std::size_t longest = 0;
      for (const auto& s : superseqs_) longest = std::max(longest, s.size());
      max_length_ = std::min(max_length_, longest);
    }
  }

  bool active() const { return !superseqs_.empty() || max_length_ != kDead; }

  State initial() const { return State(superseqs_.size(), 0); }

  /// Advances `state` by one letter; false when no candidate remains.
  bool step(State& state, const Activity& a) const {
    bool alive = superseqs_.empty();
    for (std::size_t i = 0; i < superseqs_.size(); ++i) {
      auto& pos = state[i];
      if (pos == kDead) continue;
      const auto& s = superseqs_[i];
      while (pos < s.size() && s[pos] != a) ++pos;
      if (pos == s.size()) {
        pos = kDead;
      } else {
        ++pos;
        alive = true;
      }
    }
    return alive;
  }

  bool length_ok(std::size_t len) const { return len <= max_length_; }

  bool admits(const Trace& t) const {
    if (!length_ok(t.size())) return false;
    if (superseqs_.empty()) return true;
    auto state = initial();
    for (const auto& a : t)
      if (!step(state, a)) return false;
    return true;
  }

 private:
  std::vector<Trace> superseqs_;
  std::size_t max_length_ = kDead;
};

template <class P>
class ExactEvaluator {
 public:
  ExactEvaluator(const TruncationConfig& cfg) : cfg_(cfg), filter_(cfg) {}

  BasicLanguage<P> eval(const BasicTree<P>& node, std::size_t index) {
    BasicLanguage<P> out;
    switch (node.op) {
      case Op::activity: {
        Trace t{node.label};
        if (filter_.admits(t)) {
          out.probs.emplace(std::move(t), P{1});
        } else {
          out.mass_deficit = P{1};
        }
        break;
      }
      case Op::tau:
        out.probs.emplace(Trace{}, P{1});
        break;
      case Op::sequence: {
        auto child = index + 1;
        out.probs.emplace(Trace{}, P{1});
        for (const auto& c : node.children) {
          out = convolve(out, eval(c, child));
          child += node_count(c);
        }
        break;
      }
      case Op::choice: {
        auto child = index + 1;
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          const auto& p = node.probs[i];
          if (p > P{0}) {
            const auto sub = eval(node.children[i], child);
            for (const auto& [t, q] : sub.probs) out.add(t, p * q);
            out.mass_deficit += p * sub.mass_deficit;
          }
          child += node_count(node.children[i]);
        }
        break;
      }
      case Op::parallel:
        out = parallel(node, index);
        break;
      case Op::loop:
        out = loop(node, index);
        break;
    }
    apply_floor(out);
    check_cap(out);
    return out;
  }

 private:
  void tick(std::size_t n = 1) {
    work_ += n;
    if (work_ > cfg_.work_cap) {
      throw CapacityError("evaluation exceeds the work cap of " + std::to_string(cfg_.work_cap) + " steps");
    }
  }

  void check_cap(const BasicLanguage<P>& l) const {
    if (l.size() > cfg_.entry_cap) {
      throw CapacityError("language exceeds the entry cap of " + std::to_string(cfg_.entry_cap) + " traces");
    }
  }

  void apply_floor(BasicLanguage<P>& l) const {
    if (!(cfg_.mass_floor > 0)) return;
    const P floor = P(cfg_.mass_floor);
    for (auto it = l.probs.begin(); it != l.probs.end();) {
      if (it->second < floor) {
        l.mass_deficit += it->second;
        it = l.probs.erase(it);
      } else {
        ++it;
      }
    }
  }

  BasicLanguage<P> convolve(const BasicLanguage<P>& a, const BasicLanguage<P>& b) {
    BasicLanguage<P> out;
    out.mass_deficit = a.mass_deficit + b.mass_deficit - a.mass_deficit * b.mass_deficit;
    for (const auto& [ta, pa] : a.probs) {
      tick(b.probs.size());
      for (const auto& [tb, pb] : b.probs) {
        const P p = pa * pb;
        if (!filter_.length_ok(ta.size() + tb.size())) {
          out.mass_deficit += p;
          continue;
        }
        auto t = concat(ta, tb);
        if (filter_.admits(t)) {
          out.add(t, p);
        } else {
          out.mass_deficit += p;
        }
      }
      check_cap(out);
    }
    return out;
  }

  BasicLanguage<P> parallel(const BasicTree<P>& node, std::size_t index) {
    const auto n = node.children.size();
    std::vector<BasicLanguage<P>> subs;
    auto child = index + 1;
    P alive{1};
    for (const auto& c : node.children) {
      subs.push_back(eval(c, child));
      child += node_count(c);
      alive *= P{1} - subs.back().mass_deficit;
    }
    BasicLanguage<P> out;
    out.mass_deficit = P{1} - alive;

    std::vector<const Trace*> pick(n);
    std::function<void(std::size_t, P)> tuples = [&](std::size_t i, P weight) {
      if (i == n) {
        shuffle_all(node.probs, pick, weight, out);
        return;
      }
      for (const auto& [t, p] : subs[i].probs) {
        pick[i] = &t;
        tuples(i + 1, weight * p);
      }
    };
    tuples(0, P{1});
    return out;
  }

  // Enumerates every shuffling of the picked traces and accumulates the
  // resulting traces with probability (shuffle probability) * weight.
  void shuffle_all(const std::vector<P>& probs, const std::vector<const Trace*>& traces, const P& weight,
                   BasicLanguage<P>& out) {
    const auto n = traces.size();
    std::size_t total = 0;
    for (const auto* t : traces) total += t->size();
    if (!filter_.length_ok(total)) {
      out.mass_deficit += weight;
      return;
    }
    std::vector<std::size_t> pos(n, 0);
    Trace prefix;
    prefix.reserve(total);
    auto state = filter_.initial();
    const bool filtering = filter_.active();

    std::function<void(P, typename TraceFilter::State&)> go = [&](P prob, typename TraceFilter::State& st) {
      tick();
      std::size_t remaining = 0, last = 0;
      P denom{0};
      for (std::size_t i = 0; i < n; ++i) {
        if (pos[i] < traces[i]->size()) {
          ++remaining;
          last = i;
          denom += probs[i];
        }
      }
      if (remaining <= 1) {
        const auto mark = prefix.size();
        bool ok = true;
        if (remaining == 1) {
          const auto& t = *traces[last];
          auto st2 = st;
          for (auto k = pos[last]; k < t.size(); ++k) {
            prefix.push_back(t[k]);
            if (filtering && ok) ok = filter_.step(st2, t[k]);
          }
        }
        if (ok) {
          out.add(prefix, prob);
          if (out.size() > cfg_.entry_cap) check_cap(out);
        } else {
          out.mass_deficit += prob;
        }
        prefix.resize(mark);
        return;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (pos[j] >= traces[j]->size()) continue;
        const auto& a = (*traces[j])[pos[j]];
        const P p = prob * (probs[j] / denom);
        if (filtering) {
          auto st2 = st;
          if (!filter_.step(st2, a)) {
            out.mass_deficit += p;
            continue;
          }
          prefix.push_back(a);
          ++pos[j];
          go(p, st2);
        } else {
          prefix.push_back(a);
          ++pos[j];
          go(p, st);
        }
        --pos[j];
        prefix.pop_back();
      }
    };
    go(weight, state);
  }

  BasicLanguage<P> loop(const BasicTree<P>& node, std::size_t index) {
    const auto body_index = index + 1;
    const auto redo_index = body_index + node_count(node.children[0]);
    const auto body = eval(node.children[0], body_index);
    const auto redo = eval(node.children[1], redo_index);
    const P& p = node.probs[0];
    const auto bound = cfg_.bound_for(index);
    if (bound < 1) throw ValidationError("c_max must be at least 1");

    BasicLanguage<P> out;
    BasicLanguage<P> cur = body;
    P pk{1};  // p^(m-1)
    bool tail_done = false;
    for (std::size_t m = 1; m <= bound; ++m) {
      if (cur.empty()) {
        out.mass_deficit += pk;
        tail_done = true;
        break;
      }
      const P w = pk * (P{1} - p);
      if (w > P{0}) {
        for (const auto& [t, q] : cur.probs) out.add(t, w * q);
        out.mass_deficit += w * cur.mass_deficit;
      }
      pk = pk * p;
      if (m == bound || !(pk > P{0})) break;
      cur = convolve(convolve(cur, redo), body);
    }
    if (!tail_done) out.mass_deficit += pk;
    return out;
  }

  const TruncationConfig& cfg_;
  TraceFilter filter_;
  std::size_t work_ = 0;
};

}  // namespace detail

/// Truncated stochastic language of a stochastic process tree.
///
/// Each loop contributes at most `c_max` executions; the cut tail and every
/// pruned entry end up in `mass_deficit`, so mass + deficit = 1.
/// Throws CapacityError when an intermediate language grows past `entry_cap`.
template <class P>
BasicLanguage<P> exact_sl(const BasicTree<P>& root, const TruncationConfig& trunc = {}) {
  validate(root, Annotation::stochastic);
  if (trunc.c_max < 1) throw ValidationError("c_max must be at least 1");
  detail::ExactEvaluator<P> ev(trunc);
  return ev.eval(root, 0);
}

/// Hard cap on the work done while sampling a single trace.
inline constexpr std::size_t kSampleWorkCap = 1'000'000;

namespace detail {

inline void sample_into(const Tree& node, Rng& rng, Trace& out, std::size_t& work) {
  if (++work > kSampleWorkCap) throw CapacityError("sampling exceeded the work cap (loop probability too close to 1?)");
  switch (node.op) {
    case Op::activity:
      out.push_back(node.label);
      return;
    case Op::tau:
      return;
    case Op::sequence:
      for (const auto& c : node.children) sample_into(c, rng, out, work);
      return;
    case Op::choice:
      sample_into(node.children[rng.categorical(node.probs)], rng, out, work);
      return;
    case Op::parallel: {
      const auto n = node.children.size();
      std::vector<Trace> parts(n);
      for (std::size_t i = 0; i < n; ++i) sample_into(node.children[i], rng, parts[i], work);
      std::vector<std::size_t> pos(n, 0);
      std::vector<double> weights(node.probs);
      for (std::size_t i = 0; i < n; ++i)
        if (parts[i].empty()) weights[i] = 0;
      std::size_t left = 0;
      for (const auto& p : parts) left += p.size();
      for (; left > 0; --left) {
        // choosing among unconsumed sources only is equivalent to redrawing
        // until an unconsumed one comes up
        const auto j = rng.categorical(weights);
        out.push_back(parts[j][pos[j]++]);
        if (pos[j] == parts[j].size()) weights[j] = 0;
        if (++work > kSampleWorkCap) throw CapacityError("sampling exceeded the work cap");
      }
      return;
    }
    case Op::loop: {
      const double p = node.probs[0];
      std::size_t m = 1;
      while (rng.bernoulli(p)) {
        ++m;
        if (++work > kSampleWorkCap) throw CapacityError("sampling exceeded the work cap (loop probability too close to 1?)");
      }
      for (std::size_t i = 0; i < m; ++i) {
        if (i) sample_into(node.children[1], rng, out, work);
        sample_into(node.children[0], rng, out, work);
      }
      return;
    }
  }
}

}  // namespace detail

/// Draws one trace from the tree's stochastic language.
inline Trace sample_trace(const Tree& root, Rng& rng) {
  Trace out;
  std::size_t work = 0;
  detail::sample_into(root, rng, out, work);
  return out;
}

/// Samples per substream; the split is fixed so results do not depend on the worker count.
inline constexpr std::size_t kSampleChunk = 4096;

/// Frequency-normalized language of `n_samples` independent draws.
///
/// Draw k uses substream k / kSampleChunk of `seed`, so the result is a
/// function of (tree, n_samples, seed) only, whatever `workers` is.
inline StochasticLanguage empirical_sl(const Tree& root, std::size_t n_samples, std::uint64_t seed,
                                       unsigned workers = 1) {
  if (n_samples < 1) throw ValidationError("empirical_sl needs at least one sample");
  validate(root, Annotation::stochastic);
  const std::size_t chunks = (n_samples + kSampleChunk - 1) / kSampleChunk;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(chunks)));

  using Counts = std::map<Trace, std::size_t, TraceLess>;
  std::vector<Counts> partial(workers);
  auto run = [&](unsigned w) {
    for (std::size_t c = w; c < chunks; c += workers) {
      Rng rng = Rng::substream(seed, c);
      const auto begin = c * kSampleChunk;
      const auto end = std::min(n_samples, begin + kSampleChunk);
      for (auto k = begin; k < end; ++k) ++partial[w][sample_trace(root, rng)];
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  Counts total;
  for (auto& part : partial)
    for (auto& [t, c] : part) total[t] += c;
  StochasticLanguage out;
  const double n = static_cast<double>(n_samples);
  for (const auto& [t, c] : total) out.probs.emplace(t, static_cast<double>(c) / n);
  return out;
}

}  // namespace spt
