#pragma once

// Process trees and stochastic process trees: data model, validation,
// text grammar, DOT export, annotation and plain (non-stochastic) language.
//
// Grammar:
//   tree  := leaf | "seq(" list ")" | ("xor"|"par") ["[" probs "]"] "(" list ")"
//          | "loop" ["[" prob "]"] "(" tree "," tree ")"
//   leaf  := identifier | "tau"
// A tree is either fully annotated (stochastic) or carries no probability at all.

#include <cctype>
#include <charconv>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "spt/corelang.hpp"
#include "spt/error.hpp"
#include "spt/random.hpp"

namespace spt {

enum class Op { activity, tau, sequence, choice, parallel, loop };

inline std::string_view op_keyword(Op op) {
  switch (op) {
    case Op::activity: return "activity";
    case Op::tau: return "tau";
    case Op::sequence: return "seq";
    case Op::choice: return "xor";
    case Op::parallel: return "par";
    case Op::loop: return "loop";
  }
  return "?";
}

/// Node of a (stochastic) process tree.
///
/// `probs` holds one probability per child for choice and parallel nodes and
/// the single loop-back probability for loops. It is empty everywhere in a
/// plain process tree.
template <class P>
struct BasicTree {
  Op op = Op::tau;
  Activity label;
  std::vector<BasicTree> children;
  std::vector<P> probs;

  bool is_leaf() const { return op == Op::activity || op == Op::tau; }
  bool has_probs() const { return !probs.empty(); }

  friend bool operator==(const BasicTree&, const BasicTree&) = default;
};

using Tree = BasicTree<double>;

// --- builders --------------------------------------------------------------

template <class P = double>
BasicTree<P> make_activity(Activity name) {
  if (!is_valid_activity(name)) throw ValidationError("invalid activity name '" + name + "'");
  BasicTree<P> t;
  t.op = Op::activity;
  t.label = std::move(name);
  return t;
}

template <class P = double>
BasicTree<P> make_tau() {
  return BasicTree<P>{};
}

template <class P>
BasicTree<P> make_sequence(std::vector<BasicTree<P>> children) {
  BasicTree<P> t;
  t.op = Op::sequence;
  t.children = std::move(children);
  return t;
}

template <class P>
BasicTree<P> make_choice(std::vector<BasicTree<P>> children, std::vector<P> probs = {}) {
  BasicTree<P> t;
  t.op = Op::choice;
  t.children = std::move(children);
  t.probs = std::move(probs);
  return t;
}

template <class P>
BasicTree<P> make_parallel(std::vector<BasicTree<P>> children, std::vector<P> probs = {}) {
  BasicTree<P> t;
  t.op = Op::parallel;
  t.children = std::move(children);
  t.probs = std::move(probs);
  return t;
}

template <class P>
BasicTree<P> make_loop(BasicTree<P> body, BasicTree<P> redo) {
  BasicTree<P> t;
  t.op = Op::loop;
  t.children.push_back(std::move(body));
  t.children.push_back(std::move(redo));
  return t;
}

template <class P>
BasicTree<P> make_loop(BasicTree<P> body, BasicTree<P> redo, P p_loop) {
  auto t = make_loop(std::move(body), std::move(redo));
  t.probs.push_back(std::move(p_loop));
  return t;
}

// --- traversal -------------------------------------------------------------

/// Calls f(node, preorder_index) for every node.
template <class P, class F>
void for_each_node(const BasicTree<P>& tree, F&& f) {
  std::size_t index = 0;
  std::function<void(const BasicTree<P>&)> walk = [&](const BasicTree<P>& n) {
    f(n, index++);
    for (const auto& c : n.children) walk(c);
  };
  walk(tree);
}

template <class P>
std::size_t node_count(const BasicTree<P>& tree) {
  std::size_t n = 1;
  for (const auto& c : tree.children) n += node_count(c);
  return n;
}

template <class P>
std::size_t depth(const BasicTree<P>& tree) {
  std::size_t d = 0;
  for (const auto& c : tree.children) d = std::max(d, depth(c));
  return d + 1;
}

template <class P>
std::size_t loop_count(const BasicTree<P>& tree) {
  std::size_t n = tree.op == Op::loop ? 1 : 0;
  for (const auto& c : tree.children) n += loop_count(c);
  return n;
}

/// Preorder indices of all loop nodes (the keys of per-loop truncation bounds).
template <class P>
std::vector<std::size_t> loop_indices(const BasicTree<P>& tree) {
  std::vector<std::size_t> out;
  for_each_node(tree, [&](const BasicTree<P>& n, std::size_t i) {
    if (n.op == Op::loop) out.push_back(i);
  });
  return out;
}

template <class P>
std::set<Activity> activities(const BasicTree<P>& tree) {
  std::set<Activity> out;
  for_each_node(tree, [&](const BasicTree<P>& n, std::size_t) {
    if (n.op == Op::activity) out.insert(n.label);
  });
  return out;
}

/// Same tree with every probability removed.
template <class P>
BasicTree<P> strip(const BasicTree<P>& tree) {
  BasicTree<P> out;
  out.op = tree.op;
  out.label = tree.label;
  for (const auto& c : tree.children) out.children.push_back(strip(c));
  return out;
}

/// Same shape, probabilities mapped through `f`.
template <class Q, class P, class F>
BasicTree<Q> convert(const BasicTree<P>& tree, F&& f) {
  BasicTree<Q> out;
  out.op = tree.op;
  out.label = tree.label;
  for (const auto& p : tree.probs) out.probs.push_back(f(p));
  for (const auto& c : tree.children) out.children.push_back(convert<Q>(c, f));
  return out;
}

// --- validation ------------------------------------------------------------

enum class Annotation { any, plain, stochastic };

namespace detail {

template <class P>
void validate_node(const BasicTree<P>& t, bool stochastic) {
  switch (t.op) {
    case Op::activity:
      if (!is_valid_activity(t.label)) throw ValidationError("invalid activity name '" + t.label + "'");
      [[fallthrough]];
    case Op::tau:
      if (!t.children.empty() || !t.probs.empty()) throw ValidationError("leaf with children or probabilities");
      return;
    case Op::sequence:
      if (t.children.size() < 2) throw ValidationError("seq needs at least two children");
      if (!t.probs.empty()) throw ValidationError("seq takes no probabilities");
      break;
    case Op::choice:
    case Op::parallel: {
      const auto kw = std::string(op_keyword(t.op));
      if (t.children.size() < 2) throw ValidationError(kw + " needs at least two children");
      if (!stochastic) {
        if (!t.probs.empty()) throw ValidationError("mixed annotated and plain operators");
        break;
      }
      if (t.probs.size() != t.children.size()) {
        throw ValidationError(kw + ": " + std::to_string(t.probs.size()) + " probabilities for " +
                              std::to_string(t.children.size()) + " children");
      }
      P sum{0};
      for (const auto& p : t.probs) {
        if (p < P{0} || p > P{1}) throw ValidationError(kw + ": probability outside [0,1]");
        if (t.op == Op::parallel && !(p > P{0})) {
          throw ValidationError("par: every branch probability must be positive");
        }
        sum += p;
      }
      if (!close_to(sum, P{1}, kNormTolerance)) {
        std::ostringstream msg;
        msg << kw << ": probabilities sum to " << sum << ", expected 1";
        throw ValidationError(msg.str());
      }
      break;
    }
    case Op::loop:
      if (t.children.size() != 2) throw ValidationError("loop takes exactly two children (body, redo)");
      if (!stochastic) {
        if (!t.probs.empty()) throw ValidationError("mixed annotated and plain operators");
        break;
      }
      if (t.probs.size() != 1) throw ValidationError("loop takes exactly one probability");
      if (t.probs[0] < P{0} || t.probs[0] > P{1}) throw ValidationError("loop: probability outside [0,1]");
      break;
  }
  for (const auto& c : t.children) validate_node(c, stochastic);
}

template <class P>
bool has_any_probs(const BasicTree<P>& t) {
  if (!t.probs.empty()) return true;
  for (const auto& c : t.children)
    if (has_any_probs(c)) return true;
  return false;
}

template <class P>
bool has_operator_needing_probs(const BasicTree<P>& t) {
  if (t.op == Op::choice || t.op == Op::parallel || t.op == Op::loop) return true;
  for (const auto& c : t.children)
    if (has_operator_needing_probs(c)) return true;
  return false;
}

}  // namespace detail

/// True when the tree carries probabilities (a tree without any
/// choice/parallel/loop operator counts as both plain and stochastic).
template <class P>
bool is_stochastic(const BasicTree<P>& tree) {
  return detail::has_any_probs(tree) || !detail::has_operator_needing_probs(tree);
}

template <class P>
void validate(const BasicTree<P>& tree, Annotation mode = Annotation::any) {
  bool stochastic = detail::has_any_probs(tree);
  if (mode == Annotation::plain && stochastic) throw ValidationError("expected a tree without probabilities");
  if (mode == Annotation::stochastic) {
    if (!stochastic && detail::has_operator_needing_probs(tree)) {
      throw ValidationError("expected a tree with probabilities");
    }
    stochastic = true;
  }
  detail::validate_node(tree, stochastic);
}

// --- text form -------------------------------------------------------------

namespace detail {

class TreeParser {
 public:
  explicit TreeParser(std::string_view text) : text_(text) {}

  Tree parse() {
    skip_ws();
    Tree t = tree();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    try {
      validate(t);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), 1, 0);
    }
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, 1, pos_ + 1); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string identifier() {
    skip_ws();
    const auto start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')' || c == '[' ||
          c == ']')
        break;
      ++pos_;
    }
    if (start == pos_) fail("expected an activity or operator");
    return std::string(text_.substr(start, pos_ - start));
  }

  double probability() {
    skip_ws();
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double value = 0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{}) fail("expected a probability");
    pos_ += static_cast<std::size_t>(ptr - first);
    return value;
  }

  std::vector<double> probabilities() {
    std::vector<double> out;
    expect('[');
    out.push_back(probability());
    while (peek(',')) {
      ++pos_;
      out.push_back(probability());
    }
    expect(']');
    return out;
  }

  std::vector<Tree> children() {
    std::vector<Tree> out;
    expect('(');
    out.push_back(tree());
    while (peek(',')) {
      ++pos_;
      out.push_back(tree());
    }
    expect(')');
    return out;
  }

  Tree tree() {
    const auto at = pos_;
    const auto word = identifier();
    const bool opens = peek('(') || peek('[');
    if (!opens) {
      if (word == kTau) return make_tau();
      // a bare keyword not followed by an argument list is an ordinary activity
      if (!is_valid_activity(word)) {
        pos_ = at;
        fail("invalid activity name '" + word + "'");
      }
      return make_activity(word);
    }
    Tree t;
    if (word == "seq") {
      t.op = Op::sequence;
      if (peek('[')) fail("seq takes no probabilities");
    } else if (word == "xor") {
      t.op = Op::choice;
    } else if (word == "par") {
      t.op = Op::parallel;
    } else if (word == "loop") {
      t.op = Op::loop;
    } else {
      pos_ = at;
      fail("unknown operator '" + word + "'");
    }
    if (peek('[')) t.probs = probabilities();
    const auto args_at = pos_;
    t.children = children();
    if (t.op == Op::loop) {
      if (t.children.size() != 2) {
        pos_ = args_at;
        fail("loop takes exactly two children, got " + std::to_string(t.children.size()));
      }
      if (t.probs.size() > 1) {
        pos_ = args_at;
        fail("loop takes a single probability");
      }
    } else if (t.children.size() < 2) {
      pos_ = args_at;
      fail(std::string(op_keyword(t.op)) + " needs at least two children");
    }
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::string format_probability(double p) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, ptr);
}

template <class P>
std::string format_probability(const P& p) {
  std::ostringstream out;
  out << p;
  return out.str();
}

template <class P>
void format_into(const BasicTree<P>& t, std::string& out) {
  switch (t.op) {
    case Op::activity: out += t.label; return;
    case Op::tau: out += kTau; return;
    default: break;
  }
  out += op_keyword(t.op);
  if (!t.probs.empty()) {
    out += '[';
    for (std::size_t i = 0; i < t.probs.size(); ++i) {
      if (i) out += ',';
      out += format_probability(t.probs[i]);
    }
    out += ']';
  }
  out += '(';
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    if (i) out += ',';
    format_into(t.children[i], out);
  }
  out += ')';
}

}  // namespace detail

/// Parses and validates a tree. Errors carry the 1-based column.
inline Tree parse_tree(std::string_view text) { return detail::TreeParser(text).parse(); }

/// Reads a tree file; '#' comment lines are ignored and the remaining lines joined.
inline Tree read_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tree file '" + path + "'");
  std::string text, line;
  while (std::getline(in, line)) {
    const auto trimmed = detail::trim(line);
    if (!trimmed.empty() && trimmed.front() == '#') continue;
    text += line;
    text += ' ';
  }
  try {
    return parse_tree(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

/// Canonical text. Doubles use the shortest representation that reads back
/// to the same value.
template <class P>
std::string format_tree(const BasicTree<P>& tree) {
  std::string out;
  detail::format_into(tree, out);
  return out;
}

/// Graphviz rendering; arcs of choice/parallel nodes carry the branch
/// probabilities, loop arcs are labelled body/redo.
template <class P>
std::string tree_to_dot(const BasicTree<P>& tree) {
  std::ostringstream out;
  out << "digraph spt {\n  node [fontname=\"Helvetica\"];\n";
  std::size_t next = 0;
  std::function<std::size_t(const BasicTree<P>&)> emit = [&](const BasicTree<P>& n) {
    const auto id = next++;
    out << "  n" << id;
    switch (n.op) {
      case Op::activity: out << " [shape=box,label=\"" << n.label << "\"];\n"; break;
      case Op::tau: out << " [shape=box,label=\"&tau;\"];\n"; break;
      case Op::sequence: out << " [shape=circle,label=\"&rarr;\"];\n"; break;
      case Op::choice: out << " [shape=circle,label=\"&times;\"];\n"; break;
      case Op::parallel: out << " [shape=circle,label=\"&and;\"];\n"; break;
      case Op::loop:
        out << " [shape=circle,label=\"&#8634;";
        if (n.has_probs()) out << "\\np=" << detail::format_probability(n.probs[0]);
        out << "\"];\n";
        break;
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const auto child = emit(n.children[i]);
      out << "  n" << id << " -> n" << child;
      if (n.op == Op::loop) {
        out << " [label=\"" << (i == 0 ? "body" : "redo") << "\"]";
      } else if (n.has_probs()) {
        out << " [label=\"" << detail::format_probability(n.probs[i]) << "\"]";
      }
      out << ";\n";
    }
    return id;
  };
  emit(tree);
  out << "}\n";
  return out.str();
}

// --- annotation and parameter counting ------------------------------------

enum class InitPolicy { uniform, random };

/// Attaches probabilities to a plain tree. `uniform`: uniform simplices and
/// p_loop = 0.5. `random`: Dirichlet(1,...,1) simplices and p_loop uniform on [0.05, 0.95].
inline Tree annotate(const Tree& plain, InitPolicy policy, std::uint64_t seed = 0) {
  Rng rng(seed);
  std::function<Tree(const Tree&)> go = [&](const Tree& n) {
    Tree out;
    out.op = n.op;
    out.label = n.label;
    switch (n.op) {
      case Op::choice:
      case Op::parallel:
        if (policy == InitPolicy::uniform) {
          out.probs.assign(n.children.size(), 1.0 / static_cast<double>(n.children.size()));
        } else {
          out.probs = rng.simplex(n.children.size());
        }
        break;
      case Op::loop:
        out.probs.push_back(policy == InitPolicy::uniform ? 0.5 : rng.uniform(0.05, 0.95));
        break;
      default:
        break;
    }
    for (const auto& c : n.children) out.children.push_back(go(c));
    return out;
  };
  return go(strip(plain));
}

struct ParamCount {
  /// Free parameters: n-1 per choice/parallel node with n children, 1 per loop.
  std::size_t free = 0;
  /// Raw arc count: n per choice/parallel node, 2 per loop.
  std::size_t arcs = 0;

  friend bool operator==(const ParamCount&, const ParamCount&) = default;
};

template <class P>
ParamCount param_count(const BasicTree<P>& tree) {
  ParamCount c;
  for_each_node(tree, [&](const BasicTree<P>& n, std::size_t) {
    if (n.op == Op::choice || n.op == Op::parallel) {
      c.free += n.children.size() - 1;
      c.arcs += n.children.size();
    } else if (n.op == Op::loop) {
      c.free += 1;
      c.arcs += 2;
    }
  });
  return c;
}

// --- plain language --------------------------------------------------------

namespace detail {

inline TraceSet bounded_concat(const TraceSet& a, const TraceSet& b, std::size_t max_len) {
  TraceSet out;
  for (const auto& x : a)
    for (const auto& y : b)
      if (x.size() + y.size() <= max_len) out.insert(concat(x, y));
  return out;
}

}  // namespace detail

/// All traces of the tree's language of length at most `max_len`.
template <class P>
TraceSet plain_language(const BasicTree<P>& tree, std::size_t max_len) {
  switch (tree.op) {
    case Op::activity:
      return max_len >= 1 ? TraceSet{Trace{tree.label}} : TraceSet{};
    case Op::tau:
      return TraceSet{Trace{}};
    case Op::sequence: {
      TraceSet acc{Trace{}};
      for (const auto& c : tree.children) {
        acc = detail::bounded_concat(acc, plain_language(c, max_len), max_len);
        if (acc.empty()) break;
      }
      return acc;
    }
    case Op::choice: {
      TraceSet acc;
      for (const auto& c : tree.children) acc.merge(plain_language(c, max_len));
      return acc;
    }
    case Op::parallel: {
      TraceSet acc{Trace{}};
      for (const auto& c : tree.children) {
        const auto child = plain_language(c, max_len);
        TraceSet next;
        for (const auto& x : acc)
          for (const auto& y : child)
            if (x.size() + y.size() <= max_len) next.merge(interleave(x, y));
        acc = std::move(next);
        if (acc.empty()) break;
      }
      return acc;
    }
    case Op::loop: {
      const auto body = plain_language(tree.children[0], max_len);
      const auto redo = plain_language(tree.children[1], max_len);
      TraceSet result = body;
      TraceSet frontier = body;
      while (!frontier.empty()) {
        const auto extended =
            detail::bounded_concat(detail::bounded_concat(frontier, redo, max_len), body, max_len);
        TraceSet fresh;
        for (const auto& t : extended)
          if (!result.count(t)) fresh.insert(t);
        result.insert(fresh.begin(), fresh.end());
        frontier = std::move(fresh);
      }
      return result;
    }
  }
  return {};
}

}  // namespace spt
