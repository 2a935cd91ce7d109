#pragma once

// Stochastic workflow nets: the block mapping from process trees, weighted
// firing semantics, bounded word probabilities and languages, and
// language-preserving structural reductions.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "spt/corelang.hpp"
#include "spt/error.hpp"
#include "spt/tree.hpp"

namespace spt {

using Marking = std::vector<std::uint32_t>;

struct Transition {
  std::string id;
  /// Activity label; empty for silent transitions.
  Activity label;
  double weight = 1.0;
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> outputs;

  bool silent() const { return label.empty(); }
};

/// Labelled Petri net with a unique source and sink place and transition weights.
class WorkflowNet {
 public:
  std::size_t add_place(std::string name) {
    if (place_index_.count(name)) throw ValidationError("duplicate place '" + name + "'");
    place_index_.emplace(name, places_.size());
    places_.push_back(std::move(name));
    return places_.size() - 1;
  }

  std::size_t add_transition(std::string id, Activity label = {}, double weight = 1.0) {
    if (transition_index_.count(id)) throw ValidationError("duplicate transition '" + id + "'");
    if (!label.empty() && !is_valid_activity(label)) throw ValidationError("invalid transition label '" + label + "'");
    if (!(weight >= 0)) throw ValidationError("transition weight must be non-negative");
    transition_index_.emplace(id, transitions_.size());
    transitions_.push_back(Transition{std::move(id), std::move(label), weight, {}, {}});
    return transitions_.size() - 1;
  }

  void add_input(std::size_t place, std::size_t transition) { transitions_.at(transition).inputs.push_back(place); }
  void add_output(std::size_t transition, std::size_t place) { transitions_.at(transition).outputs.push_back(place); }

  void set_source(std::size_t p) { source_ = p; }
  void set_sink(std::size_t p) { sink_ = p; }
  void set_weight(std::size_t t, double w) { transitions_.at(t).weight = w; }

  const std::vector<std::string>& places() const { return places_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const Transition& transition(std::size_t t) const { return transitions_.at(t); }
  std::size_t source() const { return source_; }
  std::size_t sink() const { return sink_; }

  std::optional<std::size_t> find_place(const std::string& name) const {
    auto it = place_index_.find(name);
    if (it == place_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find_transition(const std::string& id) const {
    auto it = transition_index_.find(id);
    if (it == transition_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t transition_count() const { return transitions_.size(); }
  std::size_t silent_count() const {
    return static_cast<std::size_t>(
        std::count_if(transitions_.begin(), transitions_.end(), [](const Transition& t) { return t.silent(); }));
  }

  Marking initial_marking() const {
    Marking m(places_.size(), 0);
    m[source_] = 1;
    return m;
  }

  Marking final_marking() const {
    Marking m(places_.size(), 0);
    m[sink_] = 1;
    return m;
  }

  /// Checks the workflow-net structure: unique source without inputs, unique
  /// sink without outputs, every node on a source-to-sink path.
  void validate() const {
    if (places_.empty()) throw ValidationError("net has no places");
    std::vector<std::vector<std::size_t>> in_arcs(places_.size()), out_arcs(places_.size());
    for (std::size_t t = 0; t < transitions_.size(); ++t) {
      for (auto p : transitions_[t].inputs) out_arcs[p].push_back(t);
      for (auto p : transitions_[t].outputs) in_arcs[p].push_back(t);
      if (transitions_[t].inputs.empty()) throw ValidationError("transition '" + transitions_[t].id + "' has no input");
      if (transitions_[t].outputs.empty()) {
        throw ValidationError("transition '" + transitions_[t].id + "' has no output");
      }
    }
    if (!in_arcs[source_].empty()) throw ValidationError("source place has incoming arcs");
    if (!out_arcs[sink_].empty()) throw ValidationError("sink place has outgoing arcs");
    for (std::size_t p = 0; p < places_.size(); ++p) {
      if (p != source_ && in_arcs[p].empty()) throw ValidationError("place '" + places_[p] + "' is a second source");
      if (p != sink_ && out_arcs[p].empty()) throw ValidationError("place '" + places_[p] + "' is a second sink");
    }
    // forward reachability from source and backward from sink over places+transitions
    const auto np = places_.size();
    auto reach = [&](bool forward) {
      std::vector<bool> seen(np + transitions_.size(), false);
      std::vector<std::size_t> stack{forward ? source_ : sink_};
      seen[stack.back()] = true;
      while (!stack.empty()) {
        const auto x = stack.back();
        stack.pop_back();
        auto visit = [&](std::size_t y) {
          if (!seen[y]) {
            seen[y] = true;
            stack.push_back(y);
          }
        };
        if (x < np) {
          for (auto t : forward ? out_arcs[x] : in_arcs[x]) visit(np + t);
        } else {
          const auto& tr = transitions_[x - np];
          for (auto p : forward ? tr.outputs : tr.inputs) visit(p);
        }
      }
      return seen;
    };
    const auto fwd = reach(true), bwd = reach(false);
    for (std::size_t x = 0; x < fwd.size(); ++x) {
      if (!fwd[x] || !bwd[x]) {
        const auto name = x < np ? places_[x] : transitions_[x - np].id;
        throw ValidationError("node '" + name + "' is not on a path from source to sink");
      }
    }
  }

 private:
  std::vector<std::string> places_;
  std::vector<Transition> transitions_;
  std::map<std::string, std::size_t> place_index_;
  std::map<std::string, std::size_t> transition_index_;
  std::size_t source_ = 0;
  std::size_t sink_ = 0;
};

// --- mapping ---------------------------------------------------------------

namespace detail {

class NetBuilder {
 public:
  WorkflowNet build(const Tree& tree) {
    const auto source = net_.add_place("source");
    const auto sink = net_.add_place("sink");
    net_.set_source(source);
    net_.set_sink(sink);
    block(tree, source, sink, 1.0);
    return std::move(net_);
  }

 private:
  std::size_t place() { return net_.add_place("p" + std::to_string(++places_)); }

  std::size_t transition(Activity label, double weight) {
    return net_.add_transition("t" + std::to_string(++transitions_), std::move(label), weight);
  }

  std::size_t connect(std::size_t from, Activity label, double weight, std::size_t to) {
    const auto t = transition(std::move(label), weight);
    net_.add_input(from, t);
    net_.add_output(t, to);
    return t;
  }

  // Builds the block of `n` between places `in` and `out`. `scale` is the
  // weight given to the block's first transitions (the ones that resolve an
  // enclosing choice).
  void block(const Tree& n, std::size_t in, std::size_t out, double scale) {
    const bool stochastic = n.has_probs();
    switch (n.op) {
      case Op::activity:
        connect(in, n.label, scale, out);
        return;
      case Op::tau:
        connect(in, {}, scale, out);
        return;
      case Op::sequence: {
        auto from = in;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          const auto to = i + 1 == n.children.size() ? out : place();
          block(n.children[i], from, to, i == 0 ? scale : 1.0);
          from = to;
        }
        return;
      }
      case Op::choice:
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          block(n.children[i], in, out, stochastic ? scale * n.probs[i] : scale);
        }
        return;
      case Op::parallel: {
        const auto fork = transition({}, scale);
        net_.add_input(in, fork);
        std::vector<std::size_t> ends;
        for (const auto& c : n.children) {
          const auto start = place();
          const auto end = place();
          net_.add_output(fork, start);
          block(c, start, end, 1.0);
          ends.push_back(end);
        }
        const auto join = transition({}, 1.0);
        for (auto e : ends) net_.add_input(e, join);
        net_.add_output(join, out);
        return;
      }
      case Op::loop: {
        const double p = stochastic ? n.probs[0] : 0.5;
        const auto body_in = place();
        const auto body_out = place();
        connect(in, {}, scale, body_in);
        block(n.children[0], body_in, body_out, 1.0);
        connect(body_out, {}, stochastic ? 1.0 - p : 1.0, out);
        const auto& redo = n.children[1];
        if (redo.op == Op::tau) {
          // a silent redo child is the redo transition itself
          connect(body_out, {}, stochastic ? p : 1.0, body_in);
        } else {
          const auto redo_in = place();
          connect(body_out, {}, stochastic ? p : 1.0, redo_in);
          block(redo, redo_in, body_in, 1.0);
        }
        return;
      }
    }
  }

  WorkflowNet net_;
  std::size_t places_ = 0;
  std::size_t transitions_ = 0;
};

}  // namespace detail

/// Block-structured workflow net of a (stochastic) process tree.
///
/// Leaves become one transition; sequences chain blocks; choices share their
/// entry and exit places; parallels add a silent fork and join; loops add a
/// silent entry, exit and redo transition (a silent redo child is absorbed by
/// the redo transition). With probabilities, choice branches and the loop
/// exit/redo pair are weighted accordingly; everything else weighs 1.
inline WorkflowNet pt_to_wn(const Tree& tree) {
  validate(tree);
  return detail::NetBuilder{}.build(tree);
}

// --- firing semantics ------------------------------------------------------

inline bool is_enabled(const WorkflowNet& net, const Marking& m, std::size_t t) {
  std::map<std::size_t, std::uint32_t> need;
  for (auto p : net.transition(t).inputs) ++need[p];
  for (const auto& [p, k] : need)
    if (m[p] < k) return false;
  return true;
}

inline std::vector<std::size_t> enabled(const WorkflowNet& net, const Marking& m) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < net.transitions().size(); ++t)
    if (is_enabled(net, m, t)) out.push_back(t);
  return out;
}

/// Fires `t`. Throws when `t` is disabled or the result puts two tokens in a place.
inline Marking fire(const WorkflowNet& net, const Marking& m, std::size_t t) {
  if (!is_enabled(net, m, t)) throw ValidationError("transition '" + net.transition(t).id + "' is not enabled");
  Marking next = m;
  for (auto p : net.transition(t).inputs) --next[p];
  for (auto p : net.transition(t).outputs) {
    if (++next[p] > 1) throw Error("net is not 1-safe: place '" + net.places()[p] + "' holds two tokens");
  }
  return next;
}

/// w_t divided by the total weight of the transitions enabled in `m`.
inline double step_probability(const WorkflowNet& net, const Marking& m, std::size_t t) {
  if (!is_enabled(net, m, t)) throw ValidationError("transition '" + net.transition(t).id + "' is not enabled");
  double total = 0;
  for (auto u : enabled(net, m)) total += net.transition(u).weight;
  if (!(total > 0)) throw ValidationError("all enabled transitions have weight 0");
  return net.transition(t).weight / total;
}

inline double firing_sequence_probability(const WorkflowNet& net, const std::vector<std::size_t>& run) {
  Marking m = net.initial_marking();
  double prob = 1.0;
  for (std::size_t k = 0; k < run.size(); ++k) {
    if (run[k] >= net.transitions().size() || !is_enabled(net, m, run[k])) {
      throw ValidationError("invalid firing sequence: step " + std::to_string(k + 1) + " is not enabled");
    }
    prob *= step_probability(net, m, run[k]);
    m = fire(net, m, run[k]);
  }
  return prob;
}

/// Same, with transitions given by id.
inline double firing_sequence_probability(const WorkflowNet& net, const std::vector<std::string>& ids) {
  std::vector<std::size_t> run;
  for (const auto& id : ids) {
    const auto t = net.find_transition(id);
    if (!t) throw ValidationError("unknown transition '" + id + "'");
    run.push_back(*t);
  }
  return firing_sequence_probability(net, run);
}

inline std::string format_marking(const WorkflowNet& net, const Marking& m) {
  std::string out;
  for (std::size_t p = 0; p < m.size(); ++p) {
    for (std::uint32_t k = 0; k < m[p]; ++k) {
      if (!out.empty()) out += '+';
      out += net.places()[p];
    }
  }
  return out.empty() ? "0" : out;
}

inline Marking parse_marking(const WorkflowNet& net, std::string_view text) {
  Marking m(net.places().size(), 0);
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto plus = text.find('+', start);
    const auto name = detail::trim(text.substr(start, plus == text.npos ? text.npos : plus - start));
    const auto p = net.find_place(std::string(name));
    if (!p) throw ValidationError("unknown place '" + std::string(name) + "'");
    ++m[*p];
    if (plus == text.npos) break;
    start = plus + 1;
  }
  return m;
}

/// Probability of a word, summed over runs of at most `max_steps` firings.
struct WordProbability {
  /// Sum over the runs found; a lower bound when `exhausted` is set.
  double probability = 0;
  /// Some run was cut by the step bound.
  bool exhausted = false;
  /// Number of distinct source-to-sink runs that produce the word.
  std::size_t runs = 0;
};

inline WordProbability wn_word_probability(const WorkflowNet& net, const Trace& word, std::size_t max_steps) {
  const auto final = net.final_marking();
  std::map<std::tuple<Marking, std::size_t, std::size_t>, WordProbability> memo;
  std::function<WordProbability(const Marking&, std::size_t, std::size_t)> go =
      [&](const Marking& m, std::size_t pos, std::size_t left) -> WordProbability {
    if (m == final) return pos == word.size() ? WordProbability{1.0, false, 1} : WordProbability{};
    const auto key = std::make_tuple(m, pos, left);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    WordProbability r;
    const auto on = enabled(net, m);
    if (left == 0) {
      r.exhausted = !on.empty();
    } else if (!on.empty()) {
      double total = 0;
      for (auto t : on) total += net.transition(t).weight;
      for (auto t : on) {
        const auto& tr = net.transition(t);
        std::size_t next_pos = pos;
        if (!tr.silent()) {
          if (pos == word.size() || tr.label != word[pos]) continue;
          ++next_pos;
        }
        const auto sub = go(fire(net, m, t), next_pos, left - 1);
        if (total > 0) r.probability += tr.weight / total * sub.probability;
        r.exhausted = r.exhausted || sub.exhausted;
        r.runs += sub.runs;
      }
    }
    memo.emplace(key, r);
    return r;
  };
  return go(net.initial_marking(), 0, max_steps);
}

/// Bounded stochastic language: every run of at most `max_steps` firings that
/// reaches the sink contributes its probability to its visible word. Mass of
/// runs still going after `max_steps`, dead runs, and runs whose word exceeds
/// `max_len` goes to the deficit.
inline StochasticLanguage wn_language(const WorkflowNet& net, std::size_t max_steps,
                                      std::optional<std::size_t> max_len = std::nullopt,
                                      std::size_t state_cap = 1'000'000) {
  const auto final = net.final_marking();
  StochasticLanguage out;
  std::map<std::pair<Marking, Trace>, double> frontier{{{net.initial_marking(), Trace{}}, 1.0}};
  for (std::size_t step = 0; step < max_steps && !frontier.empty(); ++step) {
    std::map<std::pair<Marking, Trace>, double> next;
    for (const auto& [state, prob] : frontier) {
      const auto& [m, word] = state;
      const auto on = enabled(net, m);
      double total = 0;
      for (auto t : on) total += net.transition(t).weight;
      if (on.empty() || !(total > 0)) {
        out.mass_deficit += prob;
        continue;
      }
      for (auto t : on) {
        const auto& tr = net.transition(t);
        const double p = prob * tr.weight / total;
        if (!(p > 0)) continue;
        Trace w = word;
        if (!tr.silent()) w.push_back(tr.label);
        if (max_len && w.size() > *max_len) {
          out.mass_deficit += p;
          continue;
        }
        auto m2 = fire(net, m, t);
        if (m2 == final) {
          out.add(w, p);
        } else {
          next[{std::move(m2), std::move(w)}] += p;
        }
      }
      if (next.size() > state_cap) throw CapacityError("net exploration exceeds the state cap");
    }
    frontier = std::move(next);
  }
  for (const auto& [_, p] : frontier) out.mass_deficit += p;
  return out;
}

/// Words of length at most `max_len` produced by complete runs (no step bound).
inline TraceSet wn_support(const WorkflowNet& net, std::size_t max_len, std::size_t state_cap = 5'000'000) {
  const auto final = net.final_marking();
  TraceSet out;
  std::set<std::pair<Marking, Trace>> seen;
  std::vector<std::pair<Marking, Trace>> stack{{net.initial_marking(), Trace{}}};
  seen.insert(stack.back());
  while (!stack.empty()) {
    auto [m, word] = std::move(stack.back());
    stack.pop_back();
    if (m == final) {
      out.insert(word);
      continue;
    }
    for (auto t : enabled(net, m)) {
      const auto& tr = net.transition(t);
      Trace w = word;
      if (!tr.silent()) {
        if (w.size() == max_len) continue;
        w.push_back(tr.label);
      }
      std::pair<Marking, Trace> s{fire(net, m, t), std::move(w)};
      if (seen.insert(s).second) {
        if (seen.size() > state_cap) throw CapacityError("net exploration exceeds the state cap");
        stack.push_back(std::move(s));
      }
    }
  }
  return out;
}

/// True iff some complete run of the net produces exactly `word`.
inline bool wn_accepts(const WorkflowNet& net, const Trace& word) {
  const auto final = net.final_marking();
  std::set<std::pair<Marking, std::size_t>> seen;
  std::vector<std::pair<Marking, std::size_t>> stack{{net.initial_marking(), 0}};
  seen.insert(stack.back());
  while (!stack.empty()) {
    auto [m, pos] = std::move(stack.back());
    stack.pop_back();
    if (m == final) {
      if (pos == word.size()) return true;
      continue;
    }
    for (auto t : enabled(net, m)) {
      const auto& tr = net.transition(t);
      std::size_t next = pos;
      if (!tr.silent()) {
        if (pos == word.size() || tr.label != word[pos]) continue;
        ++next;
      }
      std::pair<Marking, std::size_t> s{fire(net, m, t), next};
      if (seen.insert(s).second) stack.push_back(std::move(s));
    }
  }
  return false;
}

/// Step bound for word queries on the mapping of `tree`: four times the word
/// length plus the silent bookkeeping of `c_max` rounds per loop.
inline std::size_t default_max_steps(const Tree& tree, std::size_t word_length, std::size_t c_max = 8) {
  return 4 * (word_length + loop_count(tree) * c_max + depth(tree));
}

/// True iff tree and net produce the same traces up to length `max_len`.
inline bool trace_equivalence_check(const Tree& tree, const WorkflowNet& net, std::size_t max_len) {
  return plain_language(tree, max_len) == wn_support(net, max_len);
}

// --- reduction -------------------------------------------------------------

struct ReduceOptions {
  /// Collapse a skippable silent-redo loop (a choice between a loop with a
  /// silent redo and a silent skip) into a self-loop on one place.
  bool skippable_loops = true;
  /// Fuse places around a silent transition with a single input and output
  /// place when one of the two places has no other connection on that side.
  bool series_places = true;
  /// Drop silent transitions whose pre-set equals their post-set.
  bool silent_self_loops = true;
};

namespace detail {

class Reducer {
 public:
  explicit Reducer(const WorkflowNet& net) : src_(net) {
    for (std::size_t t = 0; t < net.transitions().size(); ++t) {
      const auto& tr = net.transition(t);
      pre_.emplace_back(tr.inputs.begin(), tr.inputs.end());
      post_.emplace_back(tr.outputs.begin(), tr.outputs.end());
    }
    t_alive_.assign(pre_.size(), true);
    p_alive_.assign(net.places().size(), true);
    source_ = net.source();
    sink_ = net.sink();
  }

  WorkflowNet run(const ReduceOptions& opt) {
    if (opt.skippable_loops) skippable_loops();
    for (bool changed = true; changed;) {
      changed = false;
      if (opt.silent_self_loops) changed |= silent_self_loops();
      if (opt.series_places) changed |= series_places();
    }
    return assemble();
  }

 private:
  bool silent(std::size_t t) const { return src_.transition(t).silent(); }

  std::vector<std::size_t> consumers(std::size_t p) const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < pre_.size(); ++t)
      if (t_alive_[t] && pre_[t].count(p)) out.push_back(t);
    return out;
  }

  std::vector<std::size_t> producers(std::size_t p) const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < post_.size(); ++t)
      if (t_alive_[t] && post_[t].count(p)) out.push_back(t);
    return out;
  }

  bool simple_silent(std::size_t t) const {
    return t_alive_[t] && silent(t) && pre_[t].size() == 1 && post_[t].size() == 1 &&
           *pre_[t].begin() != *post_[t].begin();
  }

  std::size_t in_of(std::size_t t) const { return *pre_[t].begin(); }
  std::size_t out_of(std::size_t t) const { return *post_[t].begin(); }

  // Moves every arc of `from` onto `into` and deletes `from`.
  void merge_place(std::size_t from, std::size_t into) {
    for (std::size_t t = 0; t < pre_.size(); ++t) {
      if (!t_alive_[t]) continue;
      if (pre_[t].erase(from)) pre_[t].insert(into);
      if (post_[t].erase(from)) post_[t].insert(into);
    }
    p_alive_[from] = false;
    if (from == source_) source_ = into;
    if (from == sink_) sink_ = into;
  }

  void skippable_loops() {
    for (std::size_t s = 0; s < pre_.size(); ++s) {
      if (!simple_silent(s)) continue;
      const auto c_in = in_of(s), c_out = out_of(s);
      bool done = false;
      for (auto e : consumers(c_in)) {
        if (done) break;
        if (e == s || !simple_silent(e)) continue;
        const auto b_in = out_of(e);
        if (b_in == c_in || b_in == c_out) continue;
        for (auto x : producers(c_out)) {
          if (x == s || x == e || !simple_silent(x)) continue;
          const auto b_out = in_of(x);
          if (b_out == b_in || b_out == c_in || b_out == c_out) continue;
          // redo: b_out -> b_in, the only other consumer of b_out and producer of b_in
          const auto outs = consumers(b_out);
          const auto ins = producers(b_in);
          if (outs.size() != 2 || ins.size() != 2) continue;
          const auto r = outs[0] == x ? outs[1] : outs[0];
          if (r == e || !simple_silent(r) || in_of(r) != b_out || out_of(r) != b_in) continue;
          if (std::find(ins.begin(), ins.end(), e) == ins.end() || std::find(ins.begin(), ins.end(), r) == ins.end()) {
            continue;
          }
          t_alive_[r] = false;
          t_alive_[s] = false;
          merge_place(b_out, b_in);
          done = true;
          break;
        }
      }
    }
  }

  bool silent_self_loops() {
    bool changed = false;
    for (std::size_t t = 0; t < pre_.size(); ++t) {
      if (t_alive_[t] && silent(t) && pre_[t] == post_[t]) {
        t_alive_[t] = false;
        changed = true;
      }
    }
    return changed;
  }

  bool series_places() {
    for (std::size_t t = 0; t < pre_.size(); ++t) {
      if (!simple_silent(t)) continue;
      const auto p = in_of(t), q = out_of(t);
      const auto p_out = consumers(p);
      const auto q_in = producers(q);
      // p feeds only t: tokens in p always move on to q
      if (p_out.size() == 1 && !(p == source_ && q_in.size() != 1) && !(p == sink_)) {
        t_alive_[t] = false;
        merge_place(p, q);
        return true;
      }
      // q is fed only by t: q's consumers can take the token from p directly
      if (q_in.size() == 1 && !(q == sink_ && p_out.size() != 1) && !(q == source_)) {
        t_alive_[t] = false;
        merge_place(q, p);
        return true;
      }
    }
    return false;
  }

  WorkflowNet assemble() const {
    WorkflowNet out;
    std::vector<std::size_t> index(p_alive_.size(), 0);
    for (std::size_t p = 0; p < p_alive_.size(); ++p)
      if (p_alive_[p]) index[p] = out.add_place(src_.places()[p]);
    for (std::size_t t = 0; t < pre_.size(); ++t) {
      if (!t_alive_[t]) continue;
      const auto& tr = src_.transition(t);
      const auto nt = out.add_transition(tr.id, tr.label, tr.weight);
      for (auto p : pre_[t]) out.add_input(index[p], nt);
      for (auto p : post_[t]) out.add_output(nt, index[p]);
    }
    out.set_source(index[source_]);
    out.set_sink(index[sink_]);
    return out;
  }

  const WorkflowNet& src_;
  std::vector<std::set<std::size_t>> pre_, post_;
  std::vector<bool> t_alive_, p_alive_;
  std::size_t source_ = 0, sink_ = 0;
};

}  // namespace detail

/// Language-preserving structural reduction of a net produced by pt_to_wn.
/// Weights of surviving transitions are kept as they are.
inline WorkflowNet reduce_equivalent(const WorkflowNet& net, const ReduceOptions& opt = {}) {
  return detail::Reducer(net).run(opt);
}

// --- text and DOT ----------------------------------------------------------

/// Line format: `place <id>`, `trans <id> label=<a|tau> weight=<w>`,
/// `arc <from> <to>`, `source <id>`, `sink <id>`.
inline void write_net(std::ostream& out, const WorkflowNet& net) {
  for (const auto& p : net.places()) out << "place " << p << '\n';
  for (const auto& t : net.transitions()) {
    out << "trans " << t.id << " label=" << (t.silent() ? std::string(kTau) : t.label)
        << " weight=" << format_double(t.weight) << '\n';
  }
  for (const auto& t : net.transitions()) {
    for (auto p : t.inputs) out << "arc " << net.places()[p] << ' ' << t.id << '\n';
    for (auto p : t.outputs) out << "arc " << t.id << ' ' << net.places()[p] << '\n';
  }
  out << "source " << net.places()[net.source()] << '\n';
  out << "sink " << net.places()[net.sink()] << '\n';
}

inline WorkflowNet parse_net(std::istream& in) {
  WorkflowNet net;
  std::string line;
  std::size_t lineno = 0;
  bool has_source = false, has_sink = false;
  struct Arc {
    std::string from, to;
    std::size_t line;
  };
  std::vector<Arc> arcs;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::istringstream words{std::string(text)};
    std::string kind;
    words >> kind;
    try {
      if (kind == "place") {
        std::string id;
        if (!(words >> id)) throw ParseError("place needs an id", lineno);
        net.add_place(id);
      } else if (kind == "trans") {
        std::string id, field;
        if (!(words >> id)) throw ParseError("trans needs an id", lineno);
        Activity label;
        double weight = 1.0;
        while (words >> field) {
          if (field.rfind("label=", 0) == 0) {
            label = field.substr(6);
            if (label == kTau) label.clear();
          } else if (field.rfind("weight=", 0) == 0) {
            try {
              weight = std::stod(field.substr(7));
            } catch (const std::exception&) {
              throw ParseError("bad weight '" + field + "'", lineno);
            }
          } else {
            throw ParseError("unknown field '" + field + "'", lineno);
          }
        }
        net.add_transition(id, label, weight);
      } else if (kind == "arc") {
        Arc a{{}, {}, lineno};
        if (!(words >> a.from >> a.to)) throw ParseError("arc needs two endpoints", lineno);
        arcs.push_back(a);
      } else if (kind == "source" || kind == "sink") {
        std::string id;
        if (!(words >> id)) throw ParseError(kind + " needs a place id", lineno);
        const auto p = net.find_place(id);
        if (!p) throw ParseError("unknown place '" + id + "'", lineno);
        if (kind == "source") {
          net.set_source(*p);
          has_source = true;
        } else {
          net.set_sink(*p);
          has_sink = true;
        }
      } else {
        throw ParseError("unknown directive '" + kind + "'", lineno);
      }
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  for (const auto& a : arcs) {
    const auto pf = net.find_place(a.from), tf = net.find_transition(a.from);
    const auto pt = net.find_place(a.to), tt = net.find_transition(a.to);
    if (pf && tt) {
      net.add_input(*pf, *tt);
    } else if (tf && pt) {
      net.add_output(*tf, *pt);
    } else {
      throw ParseError("arc must connect a place and a transition", a.line);
    }
  }
  if (!has_source || !has_sink) throw ParseError("net needs a source and a sink", 0);
  return net;
}

inline WorkflowNet read_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open net file '" + path + "'");
  return parse_net(in);
}

/// Graphviz rendering; silent transitions are filled black.
inline std::string net_to_dot(const WorkflowNet& net) {
  std::ostringstream out;
  out << "digraph wn {\n  rankdir=LR;\n  node [fontname=\"Helvetica\"];\n";
  for (std::size_t p = 0; p < net.places().size(); ++p) {
    out << "  \"" << net.places()[p] << "\" [shape=circle,label=\"" << (p == net.source() ? "&bull;" : "")
        << "\",xlabel=\"" << net.places()[p] << "\"];\n";
  }
  for (const auto& t : net.transitions()) {
    out << "  \"" << t.id << "\" [shape=box,";
    if (t.silent()) {
      out << "style=filled,fillcolor=black,fontcolor=white,label=\"" << t.id << "\"";
    } else {
      out << "label=\"" << t.label << "\"";
    }
    out << "];\n";
    for (auto p : t.inputs) out << "  \"" << net.places()[p] << "\" -> \"" << t.id << "\";\n";
    for (auto p : t.outputs) out << "  \"" << t.id << "\" -> \"" << net.places()[p] << "\";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace spt
