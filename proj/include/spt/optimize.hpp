#pragma once

// Fitting the probabilities of a stochastic process tree to an event log by
// minimizing rEMD with a derivative-free direct search.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "spt/corelang.hpp"
#include "spt/distance.hpp"
#include "spt/miner.hpp"
#include "spt/random.hpp"
#include "spt/semantics.hpp"
#include "spt/tree.hpp"

namespace spt {

// --- reparameterization ----------------------------------------------------

/// Maps the probabilities of a tree shape to an unconstrained real vector:
/// additive log-ratios (last child as reference) per choice/parallel node and
/// a logit per loop. Decoding clamps coordinates to [-kClamp, kClamp] so the
/// decoded probabilities stay strictly inside their domain.
class ParamLayout {
 public:
  static constexpr double kClamp = 30.0;

  struct Slot {
    std::size_t node;  // preorder index
    Op op;
    std::size_t arity;
    std::size_t offset;
  };

  explicit ParamLayout(const Tree& shape) {
    for_each_node(shape, [&](const Tree& n, std::size_t index) {
      if (n.op == Op::choice || n.op == Op::parallel) {
        slots_.push_back({index, n.op, n.children.size(), size_});
        size_ += n.children.size() - 1;
      } else if (n.op == Op::loop) {
        slots_.push_back({index, n.op, 2, size_});
        size_ += 1;
      }
    });
  }

  std::size_t size() const { return size_; }
  const std::vector<Slot>& slots() const { return slots_; }

  std::vector<double> encode(const Tree& spt) const {
    validate(spt, Annotation::stochastic);
    std::vector<double> x(size_);
    std::size_t k = 0;
    for_each_node(spt, [&](const Tree& n, std::size_t index) {
      if (n.op != Op::choice && n.op != Op::parallel && n.op != Op::loop) return;
      if (k >= slots_.size() || slots_[k].node != index || slots_[k].op != n.op) {
        throw ValidationError("tree does not match the parameter layout");
      }
      const auto& s = slots_[k++];
      if (n.op == Op::loop) {
        const double p = std::clamp(n.probs[0], 1e-300, 1.0);
        x[s.offset] = clamp(std::log(p) - std::log1p(-std::min(p, 1.0 - 1e-16)));
      } else {
        const double ref = std::max(n.probs.back(), 1e-300);
        for (std::size_t i = 0; i + 1 < s.arity; ++i) {
          x[s.offset + i] = clamp(std::log(std::max(n.probs[i], 1e-300)) - std::log(ref));
        }
      }
    });
    if (k != slots_.size()) throw ValidationError("tree does not match the parameter layout");
    return x;
  }

  Tree decode(const Tree& shape, std::span<const double> x) const {
    if (x.size() != size_) throw ValidationError("parameter vector has the wrong length");
    Tree out = strip(shape);
    std::size_t k = 0;
    std::function<void(Tree&)> go = [&](Tree& n) {
      if (n.op == Op::loop) {
        const auto& s = slots_[k++];
        n.probs = {1.0 / (1.0 + std::exp(-clamp(x[s.offset])))};
      } else if (n.op == Op::choice || n.op == Op::parallel) {
        const auto& s = slots_[k++];
        std::vector<double> e(s.arity, 0.0);
        double top = 0.0;
        for (std::size_t i = 0; i + 1 < s.arity; ++i) top = std::max(top, clamp(x[s.offset + i]));
        double sum = 0;
        for (std::size_t i = 0; i < s.arity; ++i) {
          const double xi = i + 1 < s.arity ? clamp(x[s.offset + i]) : 0.0;
          e[i] = std::exp(xi - top);
          sum += e[i];
        }
        for (auto& v : e) v /= sum;
        n.probs = std::move(e);
      }
      for (auto& c : n.children) go(c);
    };
    go(out);
    return out;
  }

 private:
  static double clamp(double v) { return std::clamp(v, -kClamp, kClamp); }

  std::vector<Slot> slots_;
  std::size_t size_ = 0;
};

// --- objective -------------------------------------------------------------

enum class EvalMode {
  /// Pick exact when the truncated language fits the entry cap, else simulate.
  automatic,
  exact,
  simulate,
};

struct OptConfig {
  /// Outer iterations; each one is a full Nelder-Mead run from a fresh simplex.
  std::size_t iterations = 20;
  EvalMode mode = EvalMode::automatic;
  /// Loop bound in exact mode; default is the longest log trace.
  std::optional<std::size_t> c_max;
  /// Samples per evaluation in simulation mode; default is 10x the log size.
  std::optional<std::size_t> n_samples;
  std::size_t entry_cap = 200'000;
  /// Independent random starts; restart r starts from a random annotation drawn from substream r.
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  /// Threads for restarts.
  unsigned workers = 1;
  RemdVariant variant = RemdVariant::penalize;
  /// Objective evaluations allowed per iteration and parameter.
  std::size_t evals_per_param = 25;
  /// Initial simplex step in the unconstrained space; decays by `step_decay` per iteration down to `min_step`.
  double initial_step = 1.0;
  double step_decay = 0.8;
  double min_step = 0.1;
};

/// rEMD of a tree shape's annotation against a fixed log.
class Objective {
 public:
  Objective(const Tree& shape, const EventLog& log, const OptConfig& cfg)
      : shape_(strip(shape)), layout_(shape_), remd_(log_to_sl<double>(log), cfg.variant), mode_(cfg.mode) {
    if (log.empty()) throw ValidationError("cannot optimize against an empty log");
    trunc_.c_max = std::max<std::size_t>(1, cfg.c_max.value_or(log.max_trace_length()));
    trunc_.entry_cap = cfg.entry_cap;
    trunc_.max_length = log.max_trace_length();
    for (const auto& [t, _] : log.entries()) trunc_.superseqs.push_back(t);
    n_samples_ = cfg.n_samples.value_or(10 * log.total());
    seed_ = cfg.seed;
    sample_workers_ = cfg.restarts > 1 ? 1 : std::max(1u, cfg.workers);
    if (mode_ == EvalMode::automatic) {
      mode_ = EvalMode::exact;
      try {
        (void)language(annotate(shape_, InitPolicy::uniform));
      } catch (const CapacityError&) {
        mode_ = EvalMode::simulate;
      }
    }
  }

  const Tree& shape() const { return shape_; }
  const ParamLayout& layout() const { return layout_; }
  EvalMode mode() const { return mode_; }
  std::size_t c_max() const { return trunc_.c_max; }
  std::size_t n_samples() const { return n_samples_; }

  /// Model language: truncated exact or simulated with the fixed seed (common random numbers).
  StochasticLanguage language(const Tree& spt) const {
    if (mode_ == EvalMode::simulate) return empirical_sl(spt, n_samples_, seed_, sample_workers_);
    return exact_sl(spt, trunc_);
  }

  double evaluate(const Tree& spt) const { return remd_(language(spt)); }

  double operator()(std::span<const double> x) const { return evaluate(layout_.decode(shape_, x)); }

 private:
  Tree shape_;
  ParamLayout layout_;
  RestrictedEmd remd_;
  EvalMode mode_;
  TruncationConfig trunc_;
  std::size_t n_samples_ = 0;
  std::uint64_t seed_ = 0;
  unsigned sample_workers_ = 1;
};

// --- direct search ---------------------------------------------------------

struct SearchPoint {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
};

/// Nelder-Mead with dimension-adaptive coefficients, started from a regular
/// axis-aligned simplex of edge `step` around `start`.
template <class F>
SearchPoint nelder_mead(F&& f, const SearchPoint& start, double step, std::size_t max_evals,
                        std::size_t& evals, double tol = 1e-10) {
  const std::size_t n = start.x.size();
  if (n == 0) return start;
  const double dn = static_cast<double>(n);
  const double alpha = 1.0, beta = 1.0 + 2.0 / dn, gamma = 0.75 - 1.0 / (2.0 * dn), delta = 1.0 - 1.0 / dn;

  std::vector<SearchPoint> s{start};
  const std::size_t budget_end = evals + max_evals;
  auto eval = [&](std::vector<double> x) {
    ++evals;
    const double v = f(std::span<const double>(x));
    return SearchPoint{std::move(x), v};
  };
  for (std::size_t i = 0; i < n; ++i) {
    auto x = start.x;
    x[i] += step;
    s.push_back(eval(std::move(x)));
  }
  auto by_value = [](const SearchPoint& a, const SearchPoint& b) { return a.value < b.value; };
  auto combine = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = c[k] + t * (w[k] - c[k]);
    return out;
  };

  while (evals < budget_end) {
    std::stable_sort(s.begin(), s.end(), by_value);
    double diameter = 0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k) diameter = std::max(diameter, std::fabs(s[i].x[k] - s[0].x[k]));
    if (s[n].value - s[0].value <= tol && diameter <= tol) break;

    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) c[k] += s[i].x[k] / dn;

    auto r = eval(combine(c, s[n].x, -alpha));
    if (r.value < s[0].value) {
      auto e = eval(combine(c, s[n].x, -alpha * beta));
      s[n] = e.value < r.value ? std::move(e) : std::move(r);
    } else if (r.value < s[n - 1].value) {
      s[n] = std::move(r);
    } else {
      const bool outside = r.value < s[n].value;
      auto k = outside ? eval(combine(c, s[n].x, -alpha * gamma)) : eval(combine(c, s[n].x, gamma));
      if (k.value < (outside ? r.value : s[n].value)) {
        s[n] = std::move(k);
      } else {
        for (std::size_t i = 1; i <= n && evals < budget_end; ++i) s[i] = eval(combine(s[0].x, s[i].x, delta));
      }
    }
  }
  return *std::min_element(s.begin(), s.end(), by_value);
}

struct OptResult {
  Tree best_tree;
  std::vector<double> best_params;
  double best_value = 0;
  /// Starting value of every restart.
  std::vector<double> initial_values;
  /// Best starting value over restarts.
  double initial_value = 0;
  /// curve[k]: best value seen after iteration k+1, over all restarts.
  std::vector<double> curve;
  EvalMode mode = EvalMode::exact;
  std::size_t c_max = 0;
  std::size_t n_samples = 0;
  std::size_t evaluations = 0;
  double seconds = 0;
  bool fitting = true;
  ParamCount params;
};

/// Searches the probabilities of `shape` minimizing rEMD to `log`.
inline OptResult optimize(const Tree& shape, const EventLog& log, const OptConfig& cfg = {}) {
  if (cfg.iterations < 1) throw ValidationError("iterations must be at least 1");
  if (cfg.restarts < 1) throw ValidationError("restarts must be at least 1");
  const auto clock_start = std::chrono::steady_clock::now();
  const Objective f(shape, log, cfg);
  const auto& layout = f.layout();

  struct Run {
    SearchPoint best;
    double initial = 0;
    std::vector<double> curve;
    std::size_t evals = 0;
  };
  std::vector<Run> runs(cfg.restarts);
  auto run_one = [&](std::size_t r) {
    Run& run = runs[r];
    const auto start = annotate(f.shape(), InitPolicy::random, Rng::substream(cfg.seed, r).next());
    run.best.x = layout.encode(start);
    run.best.value = f(run.best.x);
    run.initial = run.best.value;
    run.evals = 1;
    double step = cfg.initial_step;
    const std::size_t budget = std::max<std::size_t>(1, cfg.evals_per_param * std::max<std::size_t>(1, layout.size()));
    for (std::size_t k = 0; k < cfg.iterations; ++k) {
      auto found = nelder_mead(f, run.best, step, budget, run.evals);
      if (found.value < run.best.value) run.best = std::move(found);
      run.curve.push_back(run.best.value);
      step = std::max(cfg.min_step, step * cfg.step_decay);
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(cfg.restarts)));
  if (workers == 1) {
    for (std::size_t r = 0; r < cfg.restarts; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = w; r < cfg.restarts; r += workers) run_one(r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  OptResult out;
  std::size_t winner = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].best.value < runs[winner].best.value) winner = r;
    out.initial_values.push_back(runs[r].initial);
    out.evaluations += runs[r].evals;
  }
  out.initial_value = *std::min_element(out.initial_values.begin(), out.initial_values.end());
  out.curve.assign(cfg.iterations, std::numeric_limits<double>::infinity());
  for (const auto& run : runs)
    for (std::size_t k = 0; k < cfg.iterations; ++k) out.curve[k] = std::min(out.curve[k], run.curve[k]);
  out.best_params = runs[winner].best.x;
  out.best_value = runs[winner].best.value;
  out.best_tree = layout.decode(f.shape(), out.best_params);
  out.mode = f.mode();
  out.c_max = f.c_max();
  out.n_samples = f.n_samples();
  out.fitting = verify_fitness(shape, log);
  out.params = param_count(f.shape());
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return out;
}

// --- report ----------------------------------------------------------------

/// Tab-separated summary: '#'-prefixed key/value lines, then one
/// `iteration<TAB>remd` row per iteration.
inline void write_report(std::ostream& out, const OptResult& r) {
  out << "# tree\t" << format_tree(r.best_tree) << '\n';
  if (r.mode == EvalMode::simulate) {
    out << "# mode\tsimulate\n# n_samples\t" << r.n_samples << '\n';
  } else {
    out << "# mode\texact\n# c_max\t" << r.c_max << '\n';
  }
  out << "# free_params\t" << r.params.free << '\n';
  out << "# arc_params\t" << r.params.arcs << '\n';
  out << "# initial_remd\t" << format_double(r.initial_value) << '\n';
  out << "# final_remd\t" << format_double(r.best_value) << '\n';
  out << "# evaluations\t" << r.evaluations << '\n';
  out << "# fitting\t" << (r.fitting ? "yes" : "no") << '\n';
  out << "# seconds\t" << format_double(r.seconds) << '\n';
  out << "iteration\tremd\n";
  for (std::size_t k = 0; k < r.curve.size(); ++k) out << (k + 1) << '\t' << format_double(r.curve[k]) << '\n';
}

}  // namespace spt
