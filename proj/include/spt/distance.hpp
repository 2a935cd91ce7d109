#pragma once

// Trace edit distance, an exact transportation solver, and the Earth Mover's
// Distance between stochastic languages (plain and restricted to a log).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "spt/corelang.hpp"
#include "spt/error.hpp"

namespace spt {

/// Unit-cost edit distance (insertions, deletions, substitutions).
inline std::size_t levenshtein(const Trace& a, const Trace& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Edit distance divided by the longer length; 0 for two empty traces.
inline double levenshtein_norm(const Trace& a, const Trace& b) {
  const auto longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

/// Dense row-major matrix of transport costs.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TransportPlan {
  struct Flow {
    std::size_t from;
    std::size_t to;
    double mass;
  };
  /// Basic cells of the optimal basis (degenerate cells carry zero mass).
  std::vector<Flow> flows;
  double objective = 0;
  /// Dual potentials: cost(i,j) - u[i] - v[j] >= 0 everywhere, = 0 on basic cells.
  std::vector<double> u;
  std::vector<double> v;
  std::size_t pivots = 0;
};

namespace detail {

class TransportationSimplex {
 public:
  TransportationSimplex(std::span<const double> supplies, std::span<const double> demands, const CostMatrix& costs)
      : m_(supplies.size()), n_(demands.size()), cost_(costs), pos_(m_ * n_, kNone) {
    initial_basis(supplies, demands);
  }

  TransportPlan solve() {
    double cmax = 0;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j) cmax = std::max(cmax, std::fabs(cost_(i, j)));
    const double tol = 1e-12 * std::max(1.0, cmax);
    const std::size_t limit = 100 * (m_ + n_) * (m_ + n_) + 1000;
    std::size_t degenerate_run = 0;
    TransportPlan plan;
    for (;;) {
      build_adjacency();
      compute_duals();
      std::size_t ei = kNone, ej = kNone;
      const bool bland = degenerate_run > m_ + n_;
      double best = -tol;
      for (std::size_t i = 0; i < m_ && !(bland && ei != kNone); ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
          if (pos_[i * n_ + j] != kNone) continue;
          const double r = cost_(i, j) - u_[i] - v_[j];
          if (r < best) {
            best = r;
            ei = i;
            ej = j;
            if (bland) break;
          }
        }
      }
      if (ei == kNone) break;
      if (++plan.pivots > limit) throw Error("transport solver did not converge");
      degenerate_run = pivot(ei, ej) ? 0 : degenerate_run + 1;
    }
    plan.u = u_;
    plan.v = v_;
    for (const auto& c : basis_) {
      plan.flows.push_back({c.i, c.j, c.flow});
      plan.objective += c.flow * cost_(c.i, c.j);
    }
    return plan;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Cell {
    std::size_t i, j;
    double flow;
  };

  // Least-cost rule. Every allocation retires exactly one row or column
  // (both on the last one), which leaves m+n-1 cells forming a spanning tree.
  void initial_basis(std::span<const double> supplies, std::span<const double> demands) {
    std::vector<double> a(supplies.begin(), supplies.end()), b(demands.begin(), demands.end());
    std::vector<std::size_t> order(m_ * n_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return cost_(x / n_, x % n_) < cost_(y / n_, y % n_);
    });
    std::vector<bool> row_done(m_, false), col_done(n_, false);
    std::size_t rows_left = m_, cols_left = n_;
    for (const auto cell : order) {
      const auto i = cell / n_, j = cell % n_;
      if (row_done[i] || col_done[j]) continue;
      const double x = std::max(0.0, std::min(a[i], b[j]));
      add_cell(i, j, x);
      a[i] -= x;
      b[j] -= x;
      if (rows_left == 1 && cols_left == 1) {
        row_done[i] = col_done[j] = true;
        rows_left = cols_left = 0;
        break;
      }
      const bool retire_row = (rows_left > 1 && a[i] <= b[j]) || cols_left == 1;
      if (retire_row) {
        row_done[i] = true;
        --rows_left;
      } else {
        col_done[j] = true;
        --cols_left;
      }
    }
  }

  void add_cell(std::size_t i, std::size_t j, double flow) {
    pos_[i * n_ + j] = basis_.size();
    basis_.push_back({i, j, flow});
  }

  void remove_cell(std::size_t k) {
    const auto& c = basis_[k];
    pos_[c.i * n_ + c.j] = kNone;
    if (k + 1 != basis_.size()) {
      basis_[k] = basis_.back();
      pos_[basis_[k].i * n_ + basis_[k].j] = k;
    }
    basis_.pop_back();
  }

  // Tree nodes: rows 0..m-1, columns m..m+n-1; edges are basic cells.
  void build_adjacency() {
    adj_.assign(m_ + n_, {});
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adj_[basis_[k].i].push_back(k);
      adj_[m_ + basis_[k].j].push_back(k);
    }
  }

  std::size_t other(std::size_t node, std::size_t k) const {
    const auto& c = basis_[k];
    return node < m_ ? m_ + c.j : c.i;
  }

  void compute_duals() {
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<bool> seen(m_ + n_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const auto node = stack.back();
      stack.pop_back();
      for (const auto k : adj_[node]) {
        const auto next = other(node, k);
        if (seen[next]) continue;
        seen[next] = true;
        const auto& c = basis_[k];
        if (next >= m_) {
          v_[c.j] = cost_(c.i, c.j) - u_[c.i];
        } else {
          u_[c.i] = cost_(c.i, c.j) - v_[c.j];
        }
        stack.push_back(next);
      }
    }
  }

  // Returns true when the pivot moved a positive amount of mass.
  bool pivot(std::size_t ei, std::size_t ej) {
    // path in the basis tree from column ej to row ei
    const auto start = m_ + ej, goal = ei;
    std::vector<std::size_t> via(m_ + n_, kNone);
    std::vector<bool> seen(m_ + n_, false);
    std::queue<std::size_t> q;
    q.push(start);
    seen[start] = true;
    while (!q.empty() && !seen[goal]) {
      const auto node = q.front();
      q.pop();
      for (const auto k : adj_[node]) {
        const auto next = other(node, k);
        if (seen[next]) continue;
        seen[next] = true;
        via[next] = k;
        q.push(next);
      }
    }
    if (!seen[goal]) throw Error("transport solver: basis is not a spanning tree");
    std::vector<std::size_t> path;  // cells from ei back to ej
    for (auto node = goal; node != start;) {
      const auto k = via[node];
      path.push_back(k);
      node = other(node, k);
    }
    std::reverse(path.begin(), path.end());  // now from ej towards ei; odd steps (0,2,..) lose mass
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = kNone;
    for (std::size_t s = 0; s < path.size(); s += 2) {
      const auto k = path[s];
      const auto& c = basis_[k];
      if (c.flow < theta || (c.flow == theta && leave != kNone &&
                             std::pair(c.i, c.j) < std::pair(basis_[leave].i, basis_[leave].j))) {
        theta = c.flow;
        leave = k;
      }
    }
    theta = std::max(0.0, theta);
    for (std::size_t s = 0; s < path.size(); ++s) {
      auto& c = basis_[path[s]];
      c.flow += (s % 2 == 0) ? -theta : theta;
      if (c.flow < 0) c.flow = 0;
    }
    basis_[leave].flow = 0;
    remove_cell(leave);
    add_cell(ei, ej, theta);
    return theta > 0;
  }

  std::size_t m_, n_;
  const CostMatrix& cost_;
  std::vector<Cell> basis_;
  std::vector<std::size_t> pos_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> u_, v_;
};

}  // namespace detail

/// Exact minimum-cost transport of `supplies` onto `demands`.
/// Throws ValidationError on negative masses, negative costs or unbalanced totals.
inline TransportPlan solve_transport(std::span<const double> supplies, std::span<const double> demands,
                                     const CostMatrix& costs) {
  if (supplies.empty() || demands.empty()) throw ValidationError("transport: empty side");
  if (costs.rows() != supplies.size() || costs.cols() != demands.size()) {
    throw ValidationError("transport: cost matrix shape does not match the masses");
  }
  double sa = 0, sb = 0;
  for (double x : supplies) {
    if (!(x >= 0)) throw ValidationError("transport: negative supply");
    sa += x;
  }
  for (double x : demands) {
    if (!(x >= 0)) throw ValidationError("transport: negative demand");
    sb += x;
  }
  if (std::fabs(sa - sb) > kNormTolerance) throw ValidationError("transport: supplies and demands are not balanced");
  for (std::size_t i = 0; i < costs.rows(); ++i)
    for (std::size_t j = 0; j < costs.cols(); ++j)
      if (!(costs(i, j) >= 0)) throw ValidationError("transport: negative cost");
  return detail::TransportationSimplex(supplies, demands, costs).solve();
}

/// Checks primal feasibility, dual feasibility and complementary slackness.
inline bool certify_optimal(const TransportPlan& plan, std::span<const double> supplies,
                            std::span<const double> demands, const CostMatrix& costs, double tol = 1e-9) {
  std::vector<double> rows(supplies.size(), 0.0), cols(demands.size(), 0.0);
  for (const auto& f : plan.flows) {
    if (f.mass < -tol) return false;
    rows[f.from] += f.mass;
    cols[f.to] += f.mass;
    if (std::fabs(costs(f.from, f.to) - plan.u[f.from] - plan.v[f.to]) > tol) return false;
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (std::fabs(rows[i] - supplies[i]) > tol) return false;
  for (std::size_t j = 0; j < cols.size(); ++j)
    if (std::fabs(cols[j] - demands[j]) > tol) return false;
  for (std::size_t i = 0; i < costs.rows(); ++i)
    for (std::size_t j = 0; j < costs.cols(); ++j)
      if (costs(i, j) - plan.u[i] - plan.v[j] < -tol) return false;
  return true;
}

enum class GroundDistance { normalized, raw };

inline double ground_distance(const Trace& a, const Trace& b, GroundDistance d) {
  return d == GroundDistance::normalized ? levenshtein_norm(a, b) : static_cast<double>(levenshtein(a, b));
}

struct EmdResult {
  double distance = 0;
  TransportPlan plan;
  std::vector<Trace> from;  // row traces
  std::vector<Trace> to;    // column traces
  /// rEMD only: the plan has one extra column, the residual bucket, after `to`.
  bool residual = false;
};

namespace detail {

// Rounding in the balanced masses can leave transport dust far below any
// meaningful distance; report it as an exact zero.
inline double snap(double d) { return std::fabs(d) < 1e-12 ? 0.0 : d; }

inline void check_complete(const StochasticLanguage& l, const char* which) {
  if (l.mass_deficit > kNormTolerance || std::fabs(l.total_mass() - 1.0) > kNormTolerance) {
    throw ValidationError(std::string("emd: ") + which + " language does not carry total mass 1");
  }
}

}  // namespace detail

/// Earth Mover's Distance between two complete finite languages.
inline EmdResult emd_full(const StochasticLanguage& l1, const StochasticLanguage& l2,
                          GroundDistance ground = GroundDistance::normalized) {
  detail::check_complete(l1, "first");
  detail::check_complete(l2, "second");
  EmdResult r;
  std::vector<double> a, b;
  for (const auto& [t, p] : l1.probs) {
    r.from.push_back(t);
    a.push_back(p);
  }
  for (const auto& [t, p] : l2.probs) {
    r.to.push_back(t);
    b.push_back(p);
  }
  // absorb rounding so the totals agree exactly
  b.back() += std::accumulate(a.begin(), a.end(), 0.0) - std::accumulate(b.begin(), b.end(), 0.0);
  b.back() = std::max(0.0, b.back());
  CostMatrix c(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c(i, j) = ground_distance(r.from[i], r.to[j], ground);
  r.plan = solve_transport(a, b, c);
  r.distance = detail::snap(r.plan.objective);
  return r;
}

inline double emd(const StochasticLanguage& l1, const StochasticLanguage& l2,
                  GroundDistance ground = GroundDistance::normalized) {
  return emd_full(l1, l2, ground).distance;
}

/// How model mass outside the log's support is handled by rEMD.
enum class RemdVariant {
  /// Unmatched model mass becomes a residual bucket at distance 1 from every log trace.
  penalize,
  /// The model restricted to the log's support is rescaled to total mass 1.
  renormalize,
};

/// rEMD against a fixed log language; the log-side cost matrix is computed once.
class RestrictedEmd {
 public:
  explicit RestrictedEmd(const StochasticLanguage& log_sl, RemdVariant variant = RemdVariant::penalize,
                         GroundDistance ground = GroundDistance::normalized)
      : variant_(variant) {
    if (log_sl.empty()) throw ValidationError("remd: empty log language");
    for (const auto& [t, p] : log_sl.probs) {
      traces_.push_back(t);
      mass_.push_back(p);
    }
    const double total = std::accumulate(mass_.begin(), mass_.end(), 0.0);
    if (std::fabs(total - 1.0) > kNormTolerance) throw ValidationError("remd: log language does not sum to 1");
    for (auto& x : mass_) x /= total;
    const auto n = traces_.size();
    costs_ = CostMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) costs_(i, j) = ground_distance(traces_[i], traces_[j], ground);
  }

  const std::vector<Trace>& traces() const { return traces_; }

  double operator()(const StochasticLanguage& model) const { return evaluate(model).distance; }

  EmdResult evaluate(const StochasticLanguage& model) const {
    const auto n = traces_.size();
    std::vector<std::size_t> cols;
    std::vector<double> demand;
    double restricted = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = model.probability(traces_[j]);
      if (p > 0) {
        cols.push_back(j);
        demand.push_back(p);
        restricted += p;
      }
    }
    EmdResult r;
    r.from = traces_;
    for (auto j : cols) r.to.push_back(traces_[j]);
    bool residual = false;
    if (variant_ == RemdVariant::renormalize) {
      if (!(restricted > 0)) throw ValidationError("remd: model assigns no mass to the log's traces");
      for (auto& d : demand) d /= restricted;
    } else {
      if (restricted > 1.0) {
        for (auto& d : demand) d /= restricted;
      } else if (1.0 - restricted > 0) {
        demand.push_back(1.0 - restricted);
        residual = true;
      }
    }
    // absorb rounding so both sides carry the same total
    const double diff = std::accumulate(mass_.begin(), mass_.end(), 0.0) - std::accumulate(demand.begin(), demand.end(), 0.0);
    demand.back() = std::max(0.0, demand.back() + diff);

    CostMatrix c(n, demand.size(), 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < cols.size(); ++k) c(i, k) = costs_(i, cols[k]);
    r.plan = solve_transport(mass_, demand, c);
    r.distance = std::clamp(detail::snap(r.plan.objective), 0.0, 1.0);
    r.residual = residual;
    return r;
  }

 private:
  RemdVariant variant_;
  std::vector<Trace> traces_;
  std::vector<double> mass_;
  CostMatrix costs_;
};

/// EMD restricted to the traces of `log_sl` (see RemdVariant).
inline double remd(const StochasticLanguage& log_sl, const StochasticLanguage& model,
                   RemdVariant variant = RemdVariant::penalize) {
  return RestrictedEmd(log_sl, variant)(model);
}

/// Half the L1 distance between two finite languages (deficits ignored).
inline double total_variation(const StochasticLanguage& a, const StochasticLanguage& b) {
  double sum = 0;
  for (const auto& [t, p] : a.probs) sum += std::fabs(p - b.probability(t));
  for (const auto& [t, p] : b.probs)
    if (!a.probs.count(t)) sum += p;
  return 0.5 * sum;
}

}  // namespace spt
