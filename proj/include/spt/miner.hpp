#pragma once

// Inductive miner (basic variant): recursive cut detection on the
// directly-follows graph, with a flower-model fall-through.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "spt/corelang.hpp"
#include "spt/petrinet.hpp"
#include "spt/tree.hpp"

namespace spt {

struct DirectlyFollowsGraph {
  std::set<Activity> nodes;
  std::map<std::pair<Activity, Activity>, std::size_t> edges;
  std::map<Activity, std::size_t> start_activities;
  std::map<Activity, std::size_t> end_activities;

  bool has_edge(const Activity& a, const Activity& b) const { return edges.count({a, b}) > 0; }
  std::size_t edge_count(const Activity& a, const Activity& b) const {
    auto it = edges.find({a, b});
    return it == edges.end() ? 0 : it->second;
  }
};

inline DirectlyFollowsGraph build_dfg(const EventLog& log) {
  DirectlyFollowsGraph g;
  for (const auto& [trace, count] : log.entries()) {
    if (trace.empty()) continue;
    g.nodes.insert(trace.begin(), trace.end());
    g.start_activities[trace.front()] += count;
    g.end_activities[trace.back()] += count;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) g.edges[{trace[i], trace[i + 1]}] += count;
  }
  return g;
}

namespace detail {

using Partition = std::vector<std::set<Activity>>;

// Sorts groups by their smallest activity.
inline void canonical(Partition& groups) {
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
}

// Components of an undirected relation given as an adjacency predicate.
template <class Adjacent>
Partition components(const std::set<Activity>& nodes, Adjacent&& adjacent) {
  std::vector<Activity> v(nodes.begin(), nodes.end());
  std::vector<int> comp(v.size(), -1);
  int next = 0;
  for (std::size_t s = 0; s < v.size(); ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    std::vector<std::size_t> stack{s};
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      for (std::size_t y = 0; y < v.size(); ++y) {
        if (comp[y] < 0 && adjacent(v[x], v[y])) {
          comp[y] = next;
          stack.push_back(y);
        }
      }
    }
    ++next;
  }
  Partition out(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(comp[i])].insert(v[i]);
  canonical(out);
  return out;
}

inline Partition xor_cut(const DirectlyFollowsGraph& g) {
  auto parts = components(g.nodes, [&](const Activity& a, const Activity& b) {
    return g.has_edge(a, b) || g.has_edge(b, a);
  });
  return parts.size() > 1 ? parts : Partition{};
}

inline std::map<Activity, std::set<Activity>> reachability(const DirectlyFollowsGraph& g) {
  std::map<Activity, std::set<Activity>> reach;
  for (const auto& a : g.nodes) {
    auto& r = reach[a];
    std::vector<Activity> stack{a};
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      for (const auto& y : g.nodes) {
        if (g.has_edge(x, y) && r.insert(y).second) stack.push_back(y);
      }
    }
  }
  return reach;
}

inline Partition sequence_cut(const DirectlyFollowsGraph& g) {
  const auto reach = reachability(g);
  auto reaches = [&](const Activity& a, const Activity& b) { return reach.at(a).count(b) > 0; };
  // same group: mutually reachable, or neither reaches the other
  auto groups = components(g.nodes, [&](const Activity& a, const Activity& b) {
    return a != b && reaches(a, b) == reaches(b, a);
  });
  if (groups.size() < 2) return {};
  // earlier groups reach more of the others
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::size_t n = 0;
    for (const auto& other : groups)
      if (reaches(*groups[i].begin(), *other.begin())) ++n;
    order.emplace_back(groups.size() - n, i);
  }
  std::sort(order.begin(), order.end());
  Partition sorted;
  for (const auto& [_, i] : order) sorted.push_back(groups[i]);
  groups = std::move(sorted);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      for (const auto& a : groups[i]) {
        for (const auto& b : groups[j]) {
          if (!reaches(a, b) || reaches(b, a)) return {};
        }
      }
    }
  }
  return groups;
}

inline Partition parallel_cut(const DirectlyFollowsGraph& g) {
  auto groups = components(g.nodes, [&](const Activity& a, const Activity& b) {
    return a != b && !(g.has_edge(a, b) && g.has_edge(b, a));
  });
  if (groups.size() < 2) return {};
  for (const auto& grp : groups) {
    const bool has_start = std::any_of(grp.begin(), grp.end(), [&](const auto& a) { return g.start_activities.count(a); });
    const bool has_end = std::any_of(grp.begin(), grp.end(), [&](const auto& a) { return g.end_activities.count(a); });
    if (!has_start || !has_end) return {};
  }
  return groups;
}

// Returns {body, redo} or an empty partition.
inline Partition loop_cut(const DirectlyFollowsGraph& g) {
  std::set<Activity> body;
  for (const auto& [a, _] : g.start_activities) body.insert(a);
  for (const auto& [a, _] : g.end_activities) body.insert(a);
  std::set<Activity> rest;
  for (const auto& a : g.nodes)
    if (!body.count(a)) rest.insert(a);
  if (rest.empty()) {
    return {};
  }
  auto parts = components(rest, [&](const Activity& a, const Activity& b) {
    return g.has_edge(a, b) || g.has_edge(b, a);
  });
  std::set<Activity> redo;
  for (const auto& c : parts) {
    bool is_redo = true;
    for (const auto& x : c) {
      for (const auto& y : g.nodes) {
        if (c.count(y)) continue;
        // entered only from end activities, left only towards start activities
        if (g.has_edge(y, x) && !g.end_activities.count(y)) is_redo = false;
        if (g.has_edge(x, y) && !g.start_activities.count(y)) is_redo = false;
      }
    }
    // every end activity leads into the part and every start activity is reached from it
    for (const auto& [e, _] : g.end_activities) {
      if (!std::any_of(c.begin(), c.end(), [&](const auto& x) { return g.has_edge(e, x); })) is_redo = false;
    }
    for (const auto& [s, _] : g.start_activities) {
      if (!std::any_of(c.begin(), c.end(), [&](const auto& x) { return g.has_edge(x, s); })) is_redo = false;
    }
    if (is_redo) {
      redo.insert(c.begin(), c.end());
    } else {
      body.insert(c.begin(), c.end());
    }
  }
  if (redo.empty()) return {};
  return {body, redo};
}

inline Trace project(const Trace& t, const std::set<Activity>& group) {
  Trace out;
  for (const auto& a : t)
    if (group.count(a)) out.push_back(a);
  return out;
}

inline Tree flower(const std::set<Activity>& alphabet) {
  std::vector<Tree> leaves;
  for (const auto& a : alphabet) leaves.push_back(make_activity(a));
  Tree body = leaves.size() == 1 ? std::move(leaves.front()) : make_choice(std::move(leaves));
  return make_loop(std::move(body), make_tau());
}

inline Tree mine(const EventLog& log) {
  const auto empties = log.multiplicity(Trace{});
  if (empties == log.total()) return make_tau();
  if (empties > 0) {
    EventLog rest;
    for (const auto& [t, n] : log.entries())
      if (!t.empty()) rest.add(t, n);
    return make_choice(std::vector<Tree>{make_tau(), mine(rest)});
  }

  const auto alphabet = log.alphabet();
  if (alphabet.size() == 1) {
    const auto& a = *alphabet.begin();
    if (log.multiplicity(Trace{a}) == log.total()) return make_activity(a);
    return make_loop(make_activity(a), make_tau());
  }

  const auto g = build_dfg(log);

  if (auto parts = xor_cut(g); !parts.empty()) {
    std::vector<EventLog> subs(parts.size());
    for (const auto& [t, n] : log.entries()) {
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].count(t.front())) subs[i].add(t, n);
      }
    }
    std::vector<Tree> children;
    for (const auto& s : subs) children.push_back(mine(s));
    return make_choice(std::move(children));
  }

  auto split_projected = [&](const Partition& parts) {
    std::vector<EventLog> subs(parts.size());
    for (const auto& [t, n] : log.entries())
      for (std::size_t i = 0; i < parts.size(); ++i) subs[i].add(project(t, parts[i]), n);
    std::vector<Tree> children;
    for (const auto& s : subs) children.push_back(mine(s));
    return children;
  };

  if (auto parts = sequence_cut(g); !parts.empty()) return make_sequence(split_projected(parts));
  if (auto parts = parallel_cut(g); !parts.empty()) return make_parallel(split_projected(parts));

  if (auto parts = loop_cut(g); !parts.empty()) {
    const auto& body = parts[0];
    EventLog body_log, redo_log;
    for (const auto& [t, n] : log.entries()) {
      Trace segment;
      bool in_body = true;
      for (const auto& a : t) {
        const bool b = body.count(a) > 0;
        if (b != in_body && !segment.empty()) {
          (in_body ? body_log : redo_log).add(segment, n);
          segment.clear();
        }
        in_body = b;
        segment.push_back(a);
      }
      (in_body ? body_log : redo_log).add(segment, n);
    }
    return make_loop(mine(body_log), mine(redo_log));
  }

  return flower(alphabet);
}

}  // namespace detail

/// Discovers a plain process tree whose language contains every log trace.
/// Deterministic: ties between components are broken by activity order.
inline Tree discover(const EventLog& log) {
  if (log.empty()) throw ValidationError("cannot discover a model from an empty log");
  return detail::mine(log);
}

/// True iff every trace of the log is in the tree's language.
inline bool verify_fitness(const Tree& tree, const EventLog& log) {
  const auto net = pt_to_wn(strip(tree));
  for (const auto& [t, _] : log.entries())
    if (!wn_accepts(net, t)) return false;
  return true;
}

}  // namespace spt
