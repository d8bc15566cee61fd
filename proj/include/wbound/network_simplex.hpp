#pragma once

// Primal network simplex for the uncapacitated transportation problem on a
// complete bipartite graph with a dense cost matrix.
//
// Tree bookkeeping (thread / rev_thread / succ_num / last_succ) follows the
// LEMON NetworkSimplex layout. Differences: arcs are implicit (i * n2 + j),
// flows live on the tree nodes because non-tree arcs always carry zero flow,
// and the start basis is a north-west-corner staircase over a spatial order
// with a single zero-cost arc to the root, so no big-M costs enter the
// potentials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace wbound::detail {

class DenseNetworkSimplex {
 public:
  enum class Status { optimal, pivot_limit };

  struct Flow {
    int source;
    int sink;
    double amount;
  };

  /// supply: n1 source masses, demand: n2 sink masses, cost: n1*n2 row-major.
  /// The orders give the sequence used by the initial staircase.
  DenseNetworkSimplex(std::span<const double> supply, std::span<const double> demand,
                      std::span<const double> cost, std::span<const int> source_order,
                      std::span<const int> sink_order)
      : n1_(static_cast<int>(supply.size())),
        n2_(static_cast<int>(demand.size())),
        n_(n1_ + n2_),
        root_(n_),
        m_(static_cast<std::int64_t>(n1_) * n2_),
        art_(m_),
        cost_(cost) {
    if (n1_ < 1 || n2_ < 1) throw std::invalid_argument("network simplex: empty side");
    if (static_cast<std::int64_t>(cost.size()) != m_) throw std::invalid_argument("network simplex: cost size");
    double cmax = 0.0;
    for (double c : cost) cmax = std::max(cmax, std::abs(c));
    max_cost_ = cmax;
    tol_ = 1e-13 * cmax;
    block_ = std::max<std::int64_t>(10, static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(m_)))));
    init(supply, demand, source_order, sink_order);
  }

  Status run(std::int64_t max_pivots) {
    for (;;) {
      std::int64_t in = find_entering();
      if (in < 0) {
        refresh_potentials();
        in = find_entering();
        if (in < 0) return Status::optimal;
      }
      if (pivots_ >= max_pivots) return Status::pivot_limit;
      ++pivots_;
      find_join(in);
      find_leaving(in);
      change_flow(in);
      update_tree(in);
      update_potential(in);
    }
  }

  std::int64_t pivots() const { return pivots_; }
  double max_cost() const { return max_cost_; }

  /// Node potential pi with cost + pi(source) - pi(sink) >= 0 on all arcs.
  double source_potential(int i) const { return pi_[i]; }
  double sink_potential(int j) const { return pi_[n1_ + j]; }

  std::vector<Flow> flows() const {
    std::vector<Flow> out;
    for (int u = 0; u < n_; ++u) {
      std::int64_t e = pred_[u];
      if (e < 0 || e == art_ || !(flow_[u] > 0.0)) continue;
      out.push_back({static_cast<int>(e / n2_), static_cast<int>(e % n2_), flow_[u]});
    }
    std::sort(out.begin(), out.end(), [](const Flow& a, const Flow& b) {
      return a.source != b.source ? a.source < b.source : a.sink < b.sink;
    });
    return out;
  }

 private:
  static constexpr std::int8_t TREE = 0, LOWER = 1;
  static constexpr int UP = 1, DOWN = -1;

  int src(std::int64_t e) const { return e == art_ ? 0 : static_cast<int>(e / n2_); }
  int trg(std::int64_t e) const { return e == art_ ? root_ : n1_ + static_cast<int>(e % n2_); }
  double cost(std::int64_t e) const { return e == art_ ? 0.0 : cost_[e]; }

  void init(std::span<const double> supply, std::span<const double> demand, std::span<const int> so,
            std::span<const int> sk) {
    state_.assign(static_cast<std::size_t>(m_), LOWER);
    const int N = n_ + 1;
    parent_.assign(N, -1);
    pred_.assign(N, -1);
    dir_.assign(N, UP);
    flow_.assign(N, 0.0);
    thread_.assign(N, 0);
    rev_thread_.assign(N, 0);
    succ_num_.assign(N, 0);
    last_succ_.assign(N, 0);
    pi_.assign(N, 0.0);

    // north-west corner staircase: exactly n1 + n2 - 1 arcs
    std::vector<double> a(supply.begin(), supply.end()), b(demand.begin(), demand.end());
    std::vector<std::int64_t> arcs;
    std::vector<double> amounts;
    arcs.reserve(n_);
    amounts.reserve(n_);
    int i = 0, j = 0;
    for (;;) {
      const int s = so[i], t = sk[j];
      const bool last = (i == n1_ - 1 && j == n2_ - 1);
      double f = last ? std::max(0.0, std::max(a[s], b[t])) : std::min(a[s], b[t]);
      arcs.push_back(static_cast<std::int64_t>(s) * n2_ + t);
      amounts.push_back(f);
      if (last) break;
      a[s] -= std::min(f, a[s]);
      b[t] -= std::min(f, b[t]);
      if (i == n1_ - 1) ++j;
      else if (j == n2_ - 1) ++i;
      else if (a[s] == 0.0) ++i;
      else ++j;
    }

    // adjacency of the spanning tree including the root arc 0 -> root
    std::vector<int> deg(N, 0);
    auto ends = [&](std::int64_t e) { return std::pair<int, int>{src(e), trg(e)}; };
    for (auto e : arcs) {
      auto [u, v] = ends(e);
      ++deg[u];
      ++deg[v];
    }
    ++deg[0];
    ++deg[root_];
    std::vector<int> start(N + 1, 0);
    for (int u = 0; u < N; ++u) start[u + 1] = start[u] + deg[u];
    std::vector<int> fill(start.begin(), start.end() - 1);
    std::vector<std::int64_t> adj_arc(start[N]);
    std::vector<double> adj_amount(start[N]);
    auto add = [&](int u, std::int64_t e, double f) {
      adj_arc[fill[u]] = e;
      adj_amount[fill[u]++] = f;
    };
    for (std::size_t k = 0; k < arcs.size(); ++k) {
      auto [u, v] = ends(arcs[k]);
      add(u, arcs[k], amounts[k]);
      add(v, arcs[k], amounts[k]);
      state_[static_cast<std::size_t>(arcs[k])] = TREE;
    }
    add(0, art_, 0.0);
    add(root_, art_, 0.0);

    // preorder DFS from the root
    std::vector<int> order;
    order.reserve(N);
    std::vector<int> stack{root_};
    std::vector<char> seen(N, 0);
    seen[root_] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      order.push_back(u);
      for (int k = start[u + 1] - 1; k >= start[u]; --k) {
        std::int64_t e = adj_arc[k];
        auto [x, y] = ends(e);
        int v = x == u ? y : x;
        if (seen[v]) continue;
        seen[v] = 1;
        parent_[v] = u;
        pred_[v] = e;
        dir_[v] = (src(e) == v) ? UP : DOWN;
        flow_[v] = adj_amount[k];
        pi_[v] = dir_[v] == UP ? pi_[u] - cost(e) : pi_[u] + cost(e);
        stack.push_back(v);
      }
    }
    if (static_cast<int>(order.size()) != N) throw std::logic_error("network simplex: initial tree not spanning");
    std::vector<int> pos(N);
    for (int k = 0; k < N; ++k) pos[order[k]] = k;
    for (int k = 0; k < N; ++k) {
      int u = order[k], v = order[(k + 1) % N];
      thread_[u] = v;
      rev_thread_[v] = u;
    }
    for (int k = N - 1; k >= 0; --k) {
      int u = order[k];
      succ_num_[u] += 1;
      if (parent_[u] >= 0) succ_num_[parent_[u]] += succ_num_[u];
    }
    for (int u = 0; u < N; ++u) last_succ_[u] = order[pos[u] + succ_num_[u] - 1];
  }

  std::int64_t find_entering() {
    double best = -tol_;
    std::int64_t best_e = -1;
    std::int64_t cnt = block_;
    std::int64_t e = next_arc_;
    int i = static_cast<int>(e / n2_), j = static_cast<int>(e % n2_);
    for (std::int64_t k = 0; k < m_; ++k) {
      if (state_[static_cast<std::size_t>(e)] == LOWER) {
        double c = cost_[e] + pi_[i] - pi_[n1_ + j];
        if (c < best) {
          best = c;
          best_e = e;
        }
      }
      ++e;
      if (++j == n2_) {
        j = 0;
        if (++i == n1_) {
          i = 0;
          e = 0;
        }
      }
      if (--cnt == 0) {
        if (best_e >= 0) {
          next_arc_ = e;
          return best_e;
        }
        cnt = block_;
      }
    }
    next_arc_ = e;
    return best_e;
  }

  void find_join(std::int64_t in) {
    int u = src(in), v = trg(in);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v]) u = parent_[u];
      else v = parent_[v];
    }
    join_ = u;
  }

  void find_leaving(std::int64_t in) {
    const int first = src(in), second = trg(in);
    delta_ = std::numeric_limits<double>::infinity();
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      if (dir_[u] == UP && flow_[u] < delta_) {
        delta_ = flow_[u];
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[u]) {
      if (dir_[u] == DOWN && flow_[u] <= delta_) {
        delta_ = flow_[u];
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 0) throw std::logic_error("network simplex: unbounded cycle");
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
  }

  void change_flow(std::int64_t in) {
    if (delta_ > 0.0) {
      for (int u = src(in); u != join_; u = parent_[u]) flow_[u] -= dir_[u] * delta_;
      for (int u = trg(in); u != join_; u = parent_[u]) flow_[u] += dir_[u] * delta_;
    }
    state_[static_cast<std::size_t>(in)] = TREE;
    std::int64_t out = pred_[u_out_];
    if (out == art_) throw std::logic_error("network simplex: root arc left the basis");
    state_[static_cast<std::size_t>(out)] = LOWER;
  }

  void update_tree(std::int64_t in) {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_[u_in_] = in;
      dir_[u_in_] = u_in_ == src(in) ? UP : DOWN;
      flow_[u_in_] = delta_;
      if (thread_[v_in_] != u_out_) {
        int after = thread_[old_last_succ];
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
        after = thread_[v_in_];
        thread_[v_in_] = u_out_;
        rev_thread_[u_out_] = v_in_;
        thread_[old_last_succ] = after;
        rev_thread_[after] = old_last_succ;
      }
    } else {
      const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
      int stem = u_in_;
      int par_stem = v_in_;
      int next_stem;
      int last = last_succ_[u_in_];
      int before, after = thread_[last];
      thread_[v_in_] = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        next_stem = parent_[stem];
        thread_[last] = next_stem;
        dirty_revs_.push_back(last);
        before = rev_thread_[stem];
        thread_[before] = after;
        rev_thread_[after] = before;
        parent_[stem] = par_stem;
        par_stem = stem;
        stem = next_stem;
        last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
        after = thread_[last];
      }
      parent_[u_out_] = par_stem;
      thread_[last] = thread_continue;
      rev_thread_[thread_continue] = last;
      last_succ_[u_out_] = last;
      if (old_rev_thread != v_in_) {
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
      }
      for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

      int tmp_sc = 0, tmp_ls = last_succ_[u_out_];
      for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_[u] = pred_[p];
        dir_[u] = -dir_[p];
        flow_[u] = flow_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_[u_in_] = in;
      dir_[u_in_] = u_in_ == src(in) ? UP : DOWN;
      flow_[u_in_] = delta_;
      succ_num_[u_in_] = old_succ_num;
    }

    const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    const int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = old_rev_thread;
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = last_succ_out;
    }

    for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential(std::int64_t in) {
    const double sigma = pi_[v_in_] - pi_[u_in_] - dir_[u_in_] * cost(in);
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  // Recompute potentials from the tree to shed accumulated rounding.
  void refresh_potentials() {
    pi_[root_] = 0.0;
    for (int u = thread_[root_]; u != root_; u = thread_[u]) {
      const int p = parent_[u];
      const double c = cost(pred_[u]);
      pi_[u] = dir_[u] == UP ? pi_[p] - c : pi_[p] + c;
    }
  }

  int n1_, n2_, n_, root_;
  std::int64_t m_, art_;
  std::span<const double> cost_;
  double max_cost_ = 0.0;
  double tol_ = 0.0;
  std::int64_t block_ = 10;
  std::int64_t next_arc_ = 0;
  std::int64_t pivots_ = 0;

  std::vector<std::int8_t> state_;
  std::vector<int> parent_;
  std::vector<std::int64_t> pred_;
  std::vector<int> dir_;
  std::vector<double> flow_;
  std::vector<int> thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<double> pi_;
  std::vector<int> dirty_revs_;

  int join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  double delta_ = 0.0;
};

}  // namespace wbound::detail
