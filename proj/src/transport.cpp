#include "dynamb/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "dynamb/error.hpp"

namespace dynamb {

namespace {

// Nodes: sources [0, m), sinks [m, m+n), root m+n. Arcs: real arcs i*n+j
// from source i to sink m+j, then one artificial arc per source (to the
// root) and per sink (from the root). Nonbasic arcs carry no flow, so the
// flow of each tree arc is stored on its child node.
class NetworkSimplex {
 public:
  NetworkSimplex(const Vec& supply, const Vec& demand, const Mat& cost)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        root_(m_ + n_),
        cost_(cost) {
    const int nodes = m_ + n_ + 1;
    real_ = static_cast<long>(m_) * n_;
    arcs_ = real_ + m_ + n_;
    cost_rows_.resize(static_cast<std::size_t>(real_));
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) cost_rows_[static_cast<std::size_t>(i) * n_ + j] = cost(i, j);
    }
    const double max_c = cost.size() ? cost.cwiseAbs().maxCoeff() : 0.0;
    big_ = (1.0 + max_c) * nodes;
    eps_ = 64.0 * std::numeric_limits<double>::epsilon() * (big_ + max_c);
    parent_.assign(nodes, -1);
    pred_.assign(nodes, -1);
    up_.assign(nodes, 0);
    flow_.assign(nodes, 0.0);
    depth_.assign(nodes, 0);
    pi_.assign(nodes, 0.0);
    first_child_.assign(nodes, -1);
    next_sib_.assign(nodes, -1);
    prev_sib_.assign(nodes, -1);
    for (int i = 0; i < m_; ++i) {
      attach(i, root_, artificial_source(i), true, supply(i));
      pi_[i] = -big_;
    }
    for (int j = 0; j < n_; ++j) {
      attach(m_ + j, root_, artificial_sink(j), false, demand(j));
      pi_[m_ + j] = big_;
    }
    for (int v = 0; v < root_; ++v) depth_[v] = 1;
  }

  TransportPlan solve() {
    const long block = std::max<long>(16, static_cast<long>(std::sqrt(static_cast<double>(arcs_))));
    const long max_pivots = 100 * arcs_ + 10000;
    long next = 0;
    long pivots = 0;
    bool refreshed = false;
    while (true) {
      long best_arc = -1;
      double best = -eps_;
      long in_block = 0;
      long a = next;
      // Track (i, j) of real arcs incrementally; division per arc dominates otherwise.
      int ri = a < real_ ? static_cast<int>(a / n_) : 0;
      int rj = a < real_ ? static_cast<int>(a % n_) : 0;
      for (long cnt = 0; cnt < arcs_; ++cnt) {
        double rc;
        if (a < real_) {
          rc = cost_rows_[static_cast<std::size_t>(a)] + pi_[ri] - pi_[m_ + rj];
        } else {
          rc = reduced_cost(a);
        }
        if (rc < best) {
          best = rc;
          best_arc = a;
        }
        if (++a == arcs_) a = 0;
        if (a < real_) {
          if (++rj == n_ || a == 0) {
            rj = 0;
            ri = a == 0 ? 0 : ri + 1;
          }
        }
        if (++in_block == block) {
          if (best_arc >= 0) break;
          in_block = 0;
        }
      }
      next = a;
      if (best_arc < 0) {
        if (refreshed) break;
        // Recompute potentials from scratch before declaring optimality.
        recompute_potentials();
        refreshed = true;
        continue;
      }
      refreshed = false;
      pivot(best_arc, best);
      if (++pivots > max_pivots) {
        throw Error(ErrorKind::Solver, "network simplex exceeded pivot limit");
      }
    }
    TransportPlan plan;
    plan.pivots = pivots;
    long double total = 0.0L;
    for (int v = 0; v < root_; ++v) {
      const long a = pred_[v];
      if (a < static_cast<long>(m_) * n_) {
        if (flow_[v] <= 0.0) continue;
        const int i = static_cast<int>(a / n_);
        const int j = static_cast<int>(a % n_);
        plan.flows.push_back({i, j, flow_[v]});
        total += static_cast<long double>(flow_[v]) * cost_(i, j);
      } else if (flow_[v] > 1e-9) {
        throw Error(ErrorKind::InfeasibleWeights,
                    "transport problem is unbalanced", v);
      }
    }
    plan.cost = static_cast<double>(total);
    return plan;
  }

 private:
  long artificial_source(int i) const { return static_cast<long>(m_) * n_ + i; }
  long artificial_sink(int j) const { return static_cast<long>(m_) * n_ + m_ + j; }

  int tail(long a) const {
    const long real = static_cast<long>(m_) * n_;
    if (a < real) return static_cast<int>(a / n_);
    if (a < real + m_) return static_cast<int>(a - real);
    return root_;
  }
  int head(long a) const {
    const long real = static_cast<long>(m_) * n_;
    if (a < real) return m_ + static_cast<int>(a % n_);
    if (a < real + m_) return root_;
    return m_ + static_cast<int>(a - real - m_);
  }
  double arc_cost(long a) const {
    const long real = static_cast<long>(m_) * n_;
    if (a < real) return cost_rows_[static_cast<std::size_t>(a)];
    return big_;
  }
  double reduced_cost(long a) const {
    return arc_cost(a) + pi_[tail(a)] - pi_[head(a)];
  }

  void attach(int child, int par, long arc, bool up, double flow) {
    parent_[child] = par;
    pred_[child] = arc;
    up_[child] = up;
    flow_[child] = flow;
    prev_sib_[child] = -1;
    next_sib_[child] = first_child_[par];
    if (first_child_[par] >= 0) prev_sib_[first_child_[par]] = child;
    first_child_[par] = child;
  }

  void detach(int child) {
    const int par = parent_[child];
    if (prev_sib_[child] >= 0) {
      next_sib_[prev_sib_[child]] = next_sib_[child];
    } else {
      first_child_[par] = next_sib_[child];
    }
    if (next_sib_[child] >= 0) prev_sib_[next_sib_[child]] = prev_sib_[child];
    prev_sib_[child] = next_sib_[child] = -1;
  }

  // Reset depth and add `shift` to the potentials of the subtree at `top`.
  void refresh_subtree(int top, double shift) {
    stack_.clear();
    stack_.push_back(top);
    while (!stack_.empty()) {
      const int v = stack_.back();
      stack_.pop_back();
      depth_[v] = depth_[parent_[v]] + 1;
      pi_[v] += shift;
      for (int c = first_child_[v]; c >= 0; c = next_sib_[c]) stack_.push_back(c);
    }
  }

  void recompute_potentials() {
    stack_.clear();
    pi_[root_] = 0.0;
    for (int c = first_child_[root_]; c >= 0; c = next_sib_[c]) stack_.push_back(c);
    while (!stack_.empty()) {
      const int v = stack_.back();
      stack_.pop_back();
      const double c = arc_cost(pred_[v]);
      // Tree arcs have zero reduced cost: c + pi(tail) - pi(head) = 0.
      pi_[v] = up_[v] ? pi_[parent_[v]] - c : pi_[parent_[v]] + c;
      depth_[v] = depth_[parent_[v]] + 1;
      for (int k = first_child_[v]; k >= 0; k = next_sib_[k]) stack_.push_back(k);
    }
  }

  void pivot(long e, double rc) {
    const int u = tail(e);
    const int v = head(e);
    int x = u, y = v;
    while (x != y) {
      if (depth_[x] >= depth_[y]) {
        x = parent_[x];
      } else {
        y = parent_[y];
      }
    }
    const int join = x;

    // Cycle orientation follows e: join -> ... -> u -> v -> ... -> join.
    // The last blocking arc in that order leaves (strongly feasible rule).
    double delta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (int w = u; w != join; w = parent_[w]) {
      if (up_[w] && flow_[w] < delta) {
        delta = flow_[w];
        leave = w;
      }
    }
    for (int w = v; w != join; w = parent_[w]) {
      if (!up_[w] && flow_[w] <= delta) {
        delta = flow_[w];
        leave = w;
      }
    }
    if (leave < 0) throw Error(ErrorKind::Solver, "unbounded transport problem");

    bool leave_on_u_side = false;
    for (int w = u; w != join; w = parent_[w]) {
      flow_[w] += up_[w] ? -delta : delta;
      if (w == leave) leave_on_u_side = true;
    }
    for (int w = v; w != join; w = parent_[w]) flow_[w] += up_[w] ? delta : -delta;

    const int a = leave_on_u_side ? u : v;
    const int b = leave_on_u_side ? v : u;
    path_.clear();
    for (int w = a;; w = parent_[w]) {
      path_.push_back(w);
      if (w == leave) break;
    }
    old_pred_.clear();
    old_up_.clear();
    old_flow_.clear();
    for (int w : path_) {
      old_pred_.push_back(pred_[w]);
      old_up_.push_back(up_[w]);
      old_flow_.push_back(std::max(0.0, flow_[w]));
      detach(w);
    }
    for (std::size_t i = path_.size() - 1; i >= 1; --i) {
      attach(path_[i], path_[i - 1], old_pred_[i - 1], !old_up_[i - 1], old_flow_[i - 1]);
    }
    attach(a, b, e, a == u, delta);
    refresh_subtree(a, a == v ? rc : -rc);
  }

  int m_, n_, root_;
  const Mat& cost_;
  long real_ = 0, arcs_ = 0;
  std::vector<double> cost_rows_;  // row-major copy of cost_
  double big_ = 0.0, eps_ = 0.0;
  std::vector<int> parent_;
  std::vector<long> pred_;
  std::vector<char> up_;
  std::vector<double> flow_;
  std::vector<int> depth_;
  std::vector<double> pi_;
  std::vector<int> first_child_, next_sib_, prev_sib_;
  std::vector<int> stack_, path_;
  std::vector<long> old_pred_;
  std::vector<char> old_up_;
  std::vector<double> old_flow_;
};

// Successive shortest paths for problems with few sources. Sinks are routed
// one at a time; the residual graph is condensed onto the sources, where an
// edge i -> k moves mass of some sink j' from source i to source k at cost
// c(k, j') - c(i, j'). The cheapest such j' per (i, k) sits in a lazy heap.
// The partial flow stays optimal after each augmentation, so the condensed
// graph has no negative cycles and Bellman-Ford applies.
class FewSourcesSolver {
 public:
  FewSourcesSolver(const Vec& supply, const Vec& demand, const Mat& cost)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        cost_(cost),
        supply_(supply),
        demand_(demand),
        x_(static_cast<std::size_t>(m_) * n_, 0.0),
        heaps_(static_cast<std::size_t>(m_) * m_) {
    const double total = supply.sum();
    mass_tol_ = 1e-14 * total;
    const double max_c = cost.size() ? cost.cwiseAbs().maxCoeff() : 0.0;
    cost_tol_ = 1e-13 * (1.0 + max_c);
  }

  TransportPlan solve() {
    std::vector<double> room(supply_.data(), supply_.data() + m_);
    std::vector<double> dist(static_cast<std::size_t>(m_));
    std::vector<int> pred(static_cast<std::size_t>(m_)), via(static_cast<std::size_t>(m_));
    std::vector<double> w(static_cast<std::size_t>(m_) * m_);
    long augmentations = 0;
    for (int j = 0; j < n_; ++j) {
      double need = demand_(j);
      while (need > mass_tol_) {
        for (int i = 0; i < m_; ++i) {
          for (int k = 0; k < m_; ++k) w[idx(i, k)] = i == k ? kInf : cheapest_move(i, k);
        }
        for (int i = 0; i < m_; ++i) {
          dist[static_cast<std::size_t>(i)] = cost_(i, j);
          pred[static_cast<std::size_t>(i)] = -1;
        }
        for (int round = 0; round < m_; ++round) {
          bool changed = false;
          for (int i = 0; i < m_; ++i) {
            const double di = dist[static_cast<std::size_t>(i)];
            for (int k = 0; k < m_; ++k) {
              const double wik = w[idx(i, k)];
              if (wik == kInf) continue;
              if (di + wik < dist[static_cast<std::size_t>(k)] - cost_tol_) {
                dist[static_cast<std::size_t>(k)] = di + wik;
                pred[static_cast<std::size_t>(k)] = i;
                via[static_cast<std::size_t>(k)] = heap_top(i, k);
                changed = true;
              }
            }
          }
          if (!changed) break;
        }
        int target = -1;
        for (int k = 0; k < m_; ++k) {
          if (room[static_cast<std::size_t>(k)] > mass_tol_ &&
              (target < 0 || dist[static_cast<std::size_t>(k)] < dist[static_cast<std::size_t>(target)])) {
            target = k;
          }
        }
        if (target < 0) {
          if (need > 1e-9 * supply_.sum()) {
            throw Error(ErrorKind::InfeasibleWeights, "transport problem is unbalanced", j);
          }
          break;
        }
        // Walk back to the source that takes sink j directly.
        path_.clear();
        double delta = std::min(need, room[static_cast<std::size_t>(target)]);
        for (int k = target; pred[static_cast<std::size_t>(k)] >= 0; k = pred[static_cast<std::size_t>(k)]) {
          if (static_cast<int>(path_.size()) > m_) {
            throw Error(ErrorKind::Solver, "negative cycle in residual graph");
          }
          const int i = pred[static_cast<std::size_t>(k)];
          const int jj = via[static_cast<std::size_t>(k)];
          path_.push_back({i, k, jj});
          delta = std::min(delta, x_[xi(i, jj)]);
        }
        const int first = path_.empty() ? target : path_.back().from;
        for (const Move& mv : path_) {
          take(mv.from, mv.sink, delta);
          give(mv.to, mv.sink, delta);
        }
        give(first, j, delta);
        room[static_cast<std::size_t>(target)] -= delta;
        need -= delta;
        ++augmentations;
      }
    }
    TransportPlan plan;
    plan.pivots = augmentations;
    long double total = 0.0L;
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const double f = x_[xi(i, j)];
        if (f <= 0.0) continue;
        plan.flows.push_back({i, j, f});
        total += static_cast<long double>(f) * cost_(i, j);
      }
    }
    plan.cost = static_cast<double>(total);
    return plan;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  struct Entry {
    double key;
    int sink;
    bool operator>(const Entry& o) const { return key > o.key; }
  };
  using MinHeap = std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>>;
  struct Move {
    int from, to, sink;
  };

  std::size_t idx(int i, int k) const { return static_cast<std::size_t>(i) * m_ + k; }
  std::size_t xi(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  // Drops entries whose flow has gone to zero.
  double cheapest_move(int i, int k) {
    MinHeap& h = heaps_[idx(i, k)];
    while (!h.empty() && x_[xi(i, h.top().sink)] <= 0.0) h.pop();
    return h.empty() ? kInf : h.top().key;
  }
  int heap_top(int i, int k) const { return heaps_[idx(i, k)].top().sink; }

  void give(int i, int j, double delta) {
    double& f = x_[xi(i, j)];
    const bool fresh = f <= 0.0;
    f += delta;
    if (!fresh) return;
    for (int k = 0; k < m_; ++k) {
      if (k != i) heaps_[idx(i, k)].push({cost_(k, j) - cost_(i, j), j});
    }
  }
  void take(int i, int j, double delta) {
    double& f = x_[xi(i, j)];
    f -= delta;
    if (f <= mass_tol_) f = 0.0;
  }

  int m_, n_;
  const Mat& cost_;
  const Vec& supply_;
  const Vec& demand_;
  std::vector<double> x_;  // row-major m x n
  std::vector<MinHeap> heaps_;
  std::vector<Move> path_;
  double mass_tol_ = 0.0, cost_tol_ = 0.0;
};

}  // namespace

TransportPlan solve_transport_simplex(const Vec& supply, const Vec& demand, const Mat& cost) {
  NetworkSimplex ns(supply, demand, cost);
  return ns.solve();
}

TransportPlan solve_transport_few_sources(const Vec& supply, const Vec& demand, const Mat& cost) {
  return FewSourcesSolver(supply, demand, cost).solve();
}

TransportPlan solve_transport(const Vec& supply, const Vec& demand,
                              const Mat& cost) {
  if (cost.rows() != supply.size() || cost.cols() != demand.size()) {
    throw Error(ErrorKind::Dimension, "cost matrix does not match marginals");
  }
  if (supply.size() == 0 || demand.size() == 0) {
    throw Error(ErrorKind::Dimension, "empty transport problem");
  }
  if (!cost.allFinite()) throw Error(ErrorKind::Domain, "transport costs must be finite");
  for (Eigen::Index i = 0; i < supply.size(); ++i) {
    if (!(supply(i) > 0.0)) {
      throw Error(ErrorKind::InfeasibleWeights, "supplies must be positive", static_cast<long>(i));
    }
  }
  for (Eigen::Index j = 0; j < demand.size(); ++j) {
    if (!(demand(j) > 0.0)) {
      throw Error(ErrorKind::InfeasibleWeights, "demands must be positive", static_cast<long>(j));
    }
  }
  const double gap = supply.sum() - demand.sum();
  if (std::abs(gap) > 1e-12 * std::max(1.0, supply.sum())) {
    throw Error(ErrorKind::InfeasibleWeights, "supply and demand totals differ");
  }
  // Absorb rounding in the totals so the artificial arcs can drain fully.
  const Vec balanced = demand * (supply.sum() / demand.sum());
  const long m = supply.size(), n = demand.size();
  if (std::min(m, n) <= kFewSourcesLimit && std::max(m, n) >= 4 * std::min(m, n)) {
    if (m <= n) return FewSourcesSolver(supply, balanced, cost).solve();
    // Transpose so the short side plays the sources.
    const Mat ct = cost.transpose();
    TransportPlan plan = FewSourcesSolver(balanced, supply, ct).solve();
    for (auto& f : plan.flows) std::swap(f.source, f.sink);
    return plan;
  }
  return solve_transport_simplex(supply, balanced, cost);
}

}  // namespace dynamb
