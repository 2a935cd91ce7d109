#pragma once

// Traces, event logs and stochastic languages.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "spt/error.hpp"

namespace spt {

using Activity = std::string;
using Trace = std::vector<Activity>;

/// Name of the silent symbol. It never occurs inside a trace.
inline constexpr std::string_view kTau = "tau";

/// Tolerance used for every "sums to one" check on floating point probabilities.
inline constexpr double kNormTolerance = 1e-9;

/// Activities are non-empty tokens made of characters that none of the
/// text formats (logs, trees, languages, nets) treat specially.
inline bool is_valid_activity(std::string_view name) {
  if (name.empty() || name == kTau) return false;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || u == 0x7f) return false;
    switch (c) {
      case ',': case '(': case ')': case '[': case ']': case '#': case '"':
      case '=': case ';':
        return false;
      default:
        break;
    }
  }
  return true;
}

/// Length-lexicographic order: shorter traces first, ties broken
/// lexicographically on activity names.
struct TraceLess {
  bool operator()(const Trace& a, const Trace& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

using TraceSet = std::set<Trace, TraceLess>;

inline std::string format_trace(const Trace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) out += ',';
    out += trace[i];
  }
  return out;
}

/// Parses "a,b,c". An empty (or all-blank) string is the empty trace.
inline Trace parse_trace(std::string_view text) {
  Trace trace;
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.empty()) return trace;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto token = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!is_valid_activity(token)) {
      throw ValidationError("invalid activity token '" + std::string(token) + "'");
    }
    trace.emplace_back(token);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Event logs

/// Multiset of traces together with the alphabet they are written over.
class EventLog {
 public:
  EventLog() = default;

  void add(const Trace& trace, std::size_t count = 1) {
    if (count == 0) throw ValidationError("trace multiplicity must be positive");
    for (const auto& a : trace) {
      if (!is_valid_activity(a)) throw ValidationError("invalid activity '" + a + "'");
      alphabet_.insert(a);
    }
    entries_[trace] += count;
  }

  const std::map<Trace, std::size_t, TraceLess>& entries() const { return entries_; }
  const std::set<Activity>& alphabet() const { return alphabet_; }

  std::size_t multiplicity(const Trace& trace) const {
    auto it = entries_.find(trace);
    return it == entries_.end() ? 0 : it->second;
  }

  /// Sum of all multiplicities.
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [_, count] : entries_) n += count;
    return n;
  }

  std::size_t support_size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::size_t max_trace_length() const {
    std::size_t n = 0;
    for (const auto& [trace, _] : entries_) n = std::max(n, trace.size());
    return n;
  }

  friend bool operator==(const EventLog&, const EventLog&) = default;

 private:
  std::map<Trace, std::size_t, TraceLess> entries_;
  std::set<Activity> alphabet_;
};

enum class LogFormat {
  /// One trace per line, "a,b,c" with an optional " xN" multiplicity suffix.
  trace_list,
  /// Header "case,activity", one event per row.
  csv,
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline EventLog parse_trace_list(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::size_t count = 1;
    const auto space = text.find_last_of(" \t");
    if (space != std::string_view::npos) {
      const auto suffix = text.substr(space + 1);
      if (suffix.size() < 2 || suffix.front() != 'x') {
        throw ParseError("expected multiplicity suffix ' xN', got '" + std::string(suffix) + "'", lineno);
      }
      const auto digits = suffix.substr(1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), count);
      if (ec != std::errc{} || ptr != digits.data() + digits.size() || count == 0) {
        throw ParseError("bad multiplicity '" + std::string(suffix) + "'", lineno);
      }
      text = trim(text.substr(0, space));
    }
    try {
      log.add(parse_trace(text), count);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return log;
}

inline EventLog parse_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<std::string> order;
  std::map<std::string, Trace> cases;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError("expected exactly two comma-separated columns", lineno);
    }
    const auto case_id = trim(text.substr(0, comma));
    const auto activity = trim(text.substr(comma + 1));
    if (!header) {
      if (case_id != "case" || activity != "activity") {
        throw ParseError("expected header 'case,activity'", lineno);
      }
      header = true;
      continue;
    }
    if (case_id.empty()) throw ParseError("empty case id", lineno);
    if (!is_valid_activity(activity)) {
      throw ParseError("invalid activity token '" + std::string(activity) + "'", lineno);
    }
    auto [it, inserted] = cases.try_emplace(std::string(case_id));
    if (inserted) order.push_back(it->first);
    it->second.emplace_back(activity);
  }
  EventLog log;
  for (const auto& id : order) log.add(cases.at(id));
  return log;
}

}  // namespace detail

inline EventLog parse_log(std::istream& in, LogFormat format) {
  EventLog log = format == LogFormat::csv ? detail::parse_csv(in) : detail::parse_trace_list(in);
  if (log.empty()) throw ParseError("log contains no traces", 0);
  return log;
}

inline EventLog parse_log(std::string_view text, LogFormat format) {
  std::istringstream in{std::string(text)};
  return parse_log(in, format);
}

/// Picks the format from the extension: ".csv" is CSV, anything else a trace list.
inline EventLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open log file '" + path + "'");
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  try {
    return parse_log(in, csv ? LogFormat::csv : LogFormat::trace_list);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

inline void write_log(std::ostream& out, const EventLog& log) {
  for (const auto& [trace, count] : log.entries()) {
    out << format_trace(trace);
    if (count != 1) out << " x" << count;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Stochastic languages

namespace detail {

template <class P>
bool close_to(const P& a, const P& b, double tol) {
  if constexpr (std::is_floating_point_v<P>) {
    return std::fabs(a - b) <= tol;
  } else {
    return a == b;
  }
}

}  // namespace detail

/// Finite map from traces to probabilities plus the probability mass that
/// was cut off (loop truncation, pruning) and is therefore not listed.
template <class P>
struct BasicLanguage {
  std::map<Trace, P, TraceLess> probs;
  P mass_deficit{0};

  P total_mass() const {
    P sum{0};
    for (const auto& [_, p] : probs) sum += p;
    return sum;
  }

  P probability(const Trace& trace) const {
    auto it = probs.find(trace);
    return it == probs.end() ? P{0} : it->second;
  }

  void add(const Trace& trace, const P& p) {
    if (p > P{0}) probs[trace] += p;
  }

  TraceSet support() const {
    TraceSet out;
    for (const auto& [t, _] : probs) out.insert(t);
    return out;
  }

  std::size_t size() const { return probs.size(); }
  bool empty() const { return probs.empty(); }

  /// mass + deficit is one, within kNormTolerance for floats and exactly otherwise.
  bool normalized() const { return detail::close_to(total_mass() + mass_deficit, P{1}, kNormTolerance); }

  friend bool operator==(const BasicLanguage&, const BasicLanguage&) = default;
};

using StochasticLanguage = BasicLanguage<double>;

/// Frequency-normalized language of a log.
template <class P = double>
BasicLanguage<P> log_to_sl(const EventLog& log) {
  if (log.empty()) throw ValidationError("cannot build a language from an empty log");
  BasicLanguage<P> out;
  const P total = P(static_cast<long long>(log.total()));
  for (const auto& [trace, count] : log.entries()) {
    out.probs.emplace(trace, P(static_cast<long long>(count)) / total);
  }
  return out;
}

inline Trace concat(const Trace& a, const Trace& b) {
  Trace out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline TraceSet concat_sets(const TraceSet& s1, const TraceSet& s2) {
  TraceSet out;
  for (const auto& a : s1)
    for (const auto& b : s2) out.insert(concat(a, b));
  return out;
}

namespace detail {

inline void interleave_into(const Trace& a, std::size_t i, const Trace& b, std::size_t j, Trace& prefix,
                            TraceSet& out) {
  if (i == a.size() && j == b.size()) {
    out.insert(prefix);
    return;
  }
  if (i < a.size()) {
    prefix.push_back(a[i]);
    interleave_into(a, i + 1, b, j, prefix, out);
    prefix.pop_back();
  }
  if (j < b.size()) {
    prefix.push_back(b[j]);
    interleave_into(a, i, b, j + 1, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace detail

/// All order-preserving merges of two traces.
inline TraceSet interleave(const Trace& a, const Trace& b) {
  TraceSet out;
  Trace prefix;
  prefix.reserve(a.size() + b.size());
  detail::interleave_into(a, 0, b, 0, prefix, out);
  return out;
}

inline TraceSet interleave_sets(const TraceSet& s1, const TraceSet& s2) {
  TraceSet out;
  for (const auto& a : s1)
    for (const auto& b : s2) out.merge(interleave(a, b));
  return out;
}

/// L(σ) = Σ w_i L_i(σ); deficits mix with the same weights.
template <class P>
BasicLanguage<P> mixture(const std::vector<BasicLanguage<P>>& langs, const std::vector<P>& weights) {
  if (langs.size() != weights.size()) throw ValidationError("mixture: languages and weights differ in length");
  P sum{0};
  for (const auto& w : weights) {
    if (w < P{0} || w > P{1}) throw ValidationError("mixture: weight outside [0,1]");
    sum += w;
  }
  if (!detail::close_to(sum, P{1}, kNormTolerance)) throw ValidationError("mixture: weights do not sum to 1");
  BasicLanguage<P> out;
  for (std::size_t i = 0; i < langs.size(); ++i) {
    if (!(weights[i] > P{0})) continue;
    for (const auto& [trace, p] : langs[i].probs) out.add(trace, weights[i] * p);
    out.mass_deficit += weights[i] * langs[i].mass_deficit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Language files: "# mass_deficit=<x>" then "p<TAB>a,b,c" lines in canonical order.

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_language(std::ostream& out, const StochasticLanguage& lang) {
  out << "# mass_deficit=" << format_double(lang.mass_deficit) << '\n';
  for (const auto& [trace, p] : lang.probs) out << format_double(p) << '\t' << format_trace(trace) << '\n';
}

inline StochasticLanguage parse_language(std::istream& in) {
  StochasticLanguage lang;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      constexpr std::string_view key = "mass_deficit=";
      const auto body = detail::trim(text.substr(1));
      if (body.substr(0, key.size()) == key) {
        try {
          lang.mass_deficit = std::stod(std::string(body.substr(key.size())));
        } catch (const std::exception&) {
          throw ParseError("bad mass_deficit value", lineno);
        }
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected '<probability>\\t<trace>'", lineno);
    double p = 0;
    try {
      std::size_t used = 0;
      const std::string num(detail::trim(std::string_view(line).substr(0, tab)));
      p = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("bad probability", lineno);
    }
    if (!(p >= 0.0 && p <= 1.0 + kNormTolerance)) throw ParseError("probability outside [0,1]", lineno);
    Trace trace;
    try {
      trace = parse_trace(std::string_view(line).substr(tab + 1));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (lang.probs.count(trace)) throw ParseError("duplicate trace '" + format_trace(trace) + "'", lineno);
    if (p > 0) lang.probs.emplace(std::move(trace), p);
  }
  return lang;
}

inline StochasticLanguage read_language(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open language file '" + path + "'");
  try {
    return parse_language(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

}  // namespace spt
