#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>

#include "crystal_ot/error.hpp"
#include "crystal_ot/simd/kernels.hpp"

namespace crystal_ot::detail {
namespace {

constexpr double kZeroMass = 1e-13;
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Slot {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double flow = 0.0;
};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Simplex {
 public:
  explicit Simplex(const SimplexInput& in)
      : rows_(in.supply.size()),
        cols_(in.demand.size()),
        nodes_(rows_ + cols_),
        supply_(in.supply),
        demand_(in.demand),
        cost_(*in.cost),
        opt_(*in.options),
        k_(simd::kernels()) {
    if (cost_.rows != rows_ || cost_.cols != cols_) {
      throw InputError("network simplex: cost table does not match the marginals");
    }
    const double span = static_cast<double>(nodes_);
    cap_ = opt_.max_pivots > 0 ? opt_.max_pivots
                               : static_cast<std::int64_t>(50.0 * span * span);
    tol_ = 1e-11 * (1.0 + cost_.max_abs_finite());
    adj_.resize(nodes_);
    parent_slot_.resize(nodes_);
    parent_node_.resize(nodes_);
    depth_.resize(nodes_);
    pot_.resize(nodes_);
    stamp_.assign(nodes_, 0);
  }

  SimplexOutput run() {
    if (opt_.warm_start.empty()) {
      vogel_start();
    } else {
      load_warm_start();
    }
    for (const auto& s : basic_) hash_ ^= mix(arc_index(s));

    const bool needs_feasibility = std::any_of(basic_.begin(), basic_.end(), [&](const Slot& s) {
      return forbidden(s.i, s.j) && s.flow > 0.0;
    });
    if (needs_feasibility) {
      stats_.feasibility_phase = true;
      set_phase(Phase::Feasibility);
      optimize();
      std::size_t worst = kNone;
      double worst_flow = 0.0;
      for (const auto& s : basic_) {
        if (forbidden(s.i, s.j) && s.flow > worst_flow) {
          worst_flow = s.flow;
          worst = s.i;
        }
      }
      if (worst != kNone) {
        throw InfeasibleError("no finite-cost coupling exists: source atom " +
                                  std::to_string(worst) + " must use a forbidden edge",
                              worst);
      }
    }
    if (cost_.has_forbidden()) swap_out_forbidden();

    set_phase(Phase::Optimality);
    optimize();
    return collect();
  }

 private:
  enum class Phase { Feasibility, Optimality };

  std::size_t arc_index(const Slot& s) const { return std::size_t{s.i} * cols_ + s.j; }
  bool forbidden(std::size_t i, std::size_t j) const { return cost_.is_forbidden(i, j); }
  double tree_cost(const Slot& s) const {
    const double p = price_[arc_index(s)];
    return std::isfinite(p) ? p : 0.0;
  }

  void set_phase(Phase phase) {
    phase_ = phase;
    price_.resize(rows_ * cols_);
    for (std::size_t a = 0; a < price_.size(); ++a) {
      const bool f = cost_.has_forbidden() && cost_.forbidden[a];
      if (phase == Phase::Feasibility) {
        price_[a] = f ? 1.0 : 0.0;
      } else {
        price_[a] = f ? kInf : cost_.values[a];
      }
    }
    bland_ = false;
    seen_.clear();
    degenerate_run_ = 0;
    next_row_ = 0;
    if (!rebuild_tree()) throw Error("network simplex: basis is not a spanning tree");
  }

  // --- initial basis -------------------------------------------------------

  // Vogel's approximation. Each allocation retires exactly one row or column,
  // so the rows + cols - 1 allocations form a spanning tree.
  void vogel_start() {
    std::vector<double> a(supply_.begin(), supply_.end());
    std::vector<double> b(demand_.begin(), demand_.end());
    const double big = 2.0 * cost_.max_abs_finite() + 1.0;
    auto key = [&](std::size_t i, std::size_t j) {
      return forbidden(i, j) ? big : cost_.at(i, j);
    };

    std::vector<std::uint32_t> row_order(rows_ * cols_);
    std::vector<std::uint32_t> col_order(rows_ * cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
      auto* r = row_order.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j) r[j] = static_cast<std::uint32_t>(j);
      std::stable_sort(r, r + cols_, [&](std::uint32_t x, std::uint32_t y) {
        return key(i, x) < key(i, y);
      });
    }
    for (std::size_t j = 0; j < cols_; ++j) {
      auto* c = col_order.data() + j * rows_;
      for (std::size_t i = 0; i < rows_; ++i) c[i] = static_cast<std::uint32_t>(i);
      std::stable_sort(c, c + rows_, [&](std::uint32_t x, std::uint32_t y) {
        return key(x, j) < key(y, j);
      });
    }

    std::vector<std::uint8_t> row_on(rows_, 1), col_on(cols_, 1);
    std::vector<std::size_t> row_p1(rows_, 0), row_p2(rows_, 1);
    std::vector<std::size_t> col_p1(cols_, 0), col_p2(cols_, 1);
    std::size_t rows_left = rows_;
    std::size_t cols_left = cols_;

    auto advance = [](const std::uint32_t* order, std::size_t len, const std::vector<std::uint8_t>& on,
                      std::size_t& p1, std::size_t& p2) {
      while (p1 < len && !on[order[p1]]) ++p1;
      p2 = std::max(p2, p1 + 1);
      while (p2 < len && !on[order[p2]]) ++p2;
    };

    basic_.clear();
    basic_.reserve(nodes_ - 1);
    while (basic_.size() + 1 < nodes_) {
      // Pick the line with the largest penalty (second-cheapest minus cheapest).
      double best_pen = -kInf;
      double best_cost = kInf;
      std::size_t best_i = kNone, best_j = kNone;
      for (std::size_t i = 0; i < rows_; ++i) {
        if (!row_on[i]) continue;
        const auto* order = row_order.data() + i * cols_;
        advance(order, cols_, col_on, row_p1[i], row_p2[i]);
        const std::size_t j1 = order[row_p1[i]];
        const double c1 = key(i, j1);
        const double pen = row_p2[i] < cols_ ? key(i, order[row_p2[i]]) - c1 : -1.0;
        if (pen > best_pen || (pen == best_pen && c1 < best_cost)) {
          best_pen = pen;
          best_cost = c1;
          best_i = i;
          best_j = j1;
        }
      }
      for (std::size_t j = 0; j < cols_; ++j) {
        if (!col_on[j]) continue;
        const auto* order = col_order.data() + j * rows_;
        advance(order, rows_, row_on, col_p1[j], col_p2[j]);
        const std::size_t i1 = order[col_p1[j]];
        const double c1 = key(i1, j);
        const double pen = col_p2[j] < rows_ ? key(order[col_p2[j]], j) - c1 : -1.0;
        if (pen > best_pen || (pen == best_pen && c1 < best_cost)) {
          best_pen = pen;
          best_cost = c1;
          best_i = i1;
          best_j = j;
        }
      }

      double q = std::min(a[best_i], b[best_j]);
      const bool row_done = a[best_i] - q <= kZeroMass;
      const bool col_done = b[best_j] - q <= kZeroMass;
      if (row_done && col_done) q = std::max(a[best_i], b[best_j]);
      basic_.push_back({static_cast<std::uint32_t>(best_i), static_cast<std::uint32_t>(best_j),
                        q <= kZeroMass ? 0.0 : q});
      a[best_i] = row_done ? 0.0 : a[best_i] - q;
      b[best_j] = col_done ? 0.0 : b[best_j] - q;

      if (row_done && (!col_done || rows_left > 1)) {
        row_on[best_i] = 0;
        --rows_left;
      } else {
        col_on[best_j] = 0;
        --cols_left;
      }
    }
    build_adjacency();
  }

  void load_warm_start() {
    if (opt_.warm_start.size() + 1 != nodes_) {
      throw InputError("warm start: basis must have |mu| + |nu| - 1 arcs");
    }
    basic_.clear();
    std::vector<double> rs(rows_, 0.0), cs(cols_, 0.0);
    for (const auto& arc : opt_.warm_start) {
      if (arc.source >= rows_ || arc.target >= cols_ || arc.mass < -kZeroMass) {
        throw InputError("warm start: arc out of range or negative");
      }
      const double flow = arc.mass <= kZeroMass ? 0.0 : arc.mass;
      basic_.push_back({static_cast<std::uint32_t>(arc.source),
                        static_cast<std::uint32_t>(arc.target), flow});
      rs[arc.source] += flow;
      cs[arc.target] += flow;
    }
    for (std::size_t i = 0; i < rows_; ++i) {
      if (std::abs(rs[i] - supply_[i]) > 1e-9) throw InputError("warm start: row sums differ");
    }
    for (std::size_t j = 0; j < cols_; ++j) {
      if (std::abs(cs[j] - demand_[j]) > 1e-9) throw InputError("warm start: column sums differ");
    }
    build_adjacency();
    price_.assign(rows_ * cols_, 0.0);
    if (!rebuild_tree()) throw InputError("warm start: arcs do not form a spanning tree");
  }

  void build_adjacency() {
    for (auto& a : adj_) a.clear();
    for (std::uint32_t s = 0; s < basic_.size(); ++s) {
      adj_[basic_[s].i].push_back(s);
      adj_[rows_ + basic_[s].j].push_back(s);
    }
  }

  // --- tree ----------------------------------------------------------------

  // BFS from row 0 recomputing parents, depths and potentials. Returns false
  // if the basis does not span every node.
  bool rebuild_tree() {
    if (++cur_stamp_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      cur_stamp_ = 1;
    }
    order_.clear();
    order_.push_back(0);
    stamp_[0] = cur_stamp_;
    depth_[0] = 0;
    pot_[0] = 0.0;
    parent_slot_[0] = kNone;
    parent_node_[0] = kNone;
    for (std::size_t h = 0; h < order_.size(); ++h) {
      const std::uint32_t node = order_[h];
      for (std::uint32_t s : adj_[node]) {
        const Slot& arc = basic_[s];
        const std::uint32_t other =
            node < rows_ ? static_cast<std::uint32_t>(rows_ + arc.j) : arc.i;
        if (stamp_[other] == cur_stamp_) continue;
        stamp_[other] = cur_stamp_;
        parent_node_[other] = node;
        parent_slot_[other] = s;
        depth_[other] = depth_[node] + 1;
        pot_[other] = tree_cost(arc) - pot_[node];
        order_.push_back(other);
      }
    }
    return order_.size() == nodes_;
  }

  void replace_slot(std::uint32_t slot, std::uint32_t i, std::uint32_t j, double flow) {
    const Slot old = basic_[slot];
    auto drop = [&](std::vector<std::uint32_t>& list) {
      list.erase(std::find(list.begin(), list.end(), slot));
    };
    drop(adj_[old.i]);
    drop(adj_[rows_ + old.j]);
    hash_ ^= mix(arc_index(old));
    basic_[slot] = {i, j, flow};
    adj_[i].push_back(slot);
    adj_[rows_ + j].push_back(slot);
    hash_ ^= mix(arc_index(basic_[slot]));
  }

  // Replaces zero-mass forbidden basics by allowed arcs across the same cut.
  void swap_out_forbidden() {
    std::vector<std::uint8_t> side(nodes_);
    for (std::uint32_t s = 0; s < basic_.size(); ++s) {
      if (!forbidden(basic_[s].i, basic_[s].j)) continue;
      // Label the component of the slot's row endpoint with the slot removed.
      std::fill(side.begin(), side.end(), 0);
      std::vector<std::uint32_t> stack{basic_[s].i};
      side[basic_[s].i] = 1;
      while (!stack.empty()) {
        const std::uint32_t node = stack.back();
        stack.pop_back();
        for (std::uint32_t t : adj_[node]) {
          if (t == s) continue;
          const std::uint32_t other =
              node < rows_ ? static_cast<std::uint32_t>(rows_ + basic_[t].j) : basic_[t].i;
          if (!side[other]) {
            side[other] = 1;
            stack.push_back(other);
          }
        }
      }
      bool swapped = false;
      for (std::size_t i = 0; i < rows_ && !swapped; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
          if (forbidden(i, j) || side[i] == side[rows_ + j]) continue;
          replace_slot(s, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 0.0);
          swapped = true;
          break;
        }
      }
    }
  }

  // --- pivoting ------------------------------------------------------------

  struct Entering {
    std::uint32_t i;
    std::uint32_t j;
  };

  std::optional<Entering> price_block() {
    const double* v = pot_.data() + rows_;
    const std::size_t block_arcs =
        std::max<std::size_t>(cols_, static_cast<std::size_t>(std::sqrt(double(rows_ * cols_))));
    const std::size_t block_rows = std::max<std::size_t>(1, block_arcs / cols_);
    double best = -tol_;
    std::optional<Entering> pick;
    for (std::size_t step = 0; step < rows_; ++step) {
      const std::size_t i = (next_row_ + step) % rows_;
      const auto am = k_.reduced_argmin(price_.data() + i * cols_, v, pot_[i], cols_);
      if (am.index >= 0 && am.value < best) {
        best = am.value;
        pick = Entering{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(am.index)};
      }
      if (pick && step + 1 >= block_rows) {
        next_row_ = (i + 1) % rows_;
        return pick;
      }
    }
    return pick;
  }

  std::optional<Entering> price_bland() {
    const double* v = pot_.data() + rows_;
    for (std::size_t i = 0; i < rows_; ++i) {
      const auto j = k_.first_below(price_.data() + i * cols_, v, pot_[i], cols_, -tol_);
      if (j >= 0) return Entering{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
    }
    return std::nullopt;
  }

  void pivot(Entering e) {
    // Cycle = entering arc + tree path between row e.i and column e.j. Going
    // from the column to the row, arcs traversed column->row lose flow.
    minus_.clear();
    plus_.clear();
    std::uint32_t x = e.i;
    std::uint32_t y = static_cast<std::uint32_t>(rows_ + e.j);
    auto step_from_row_side = [&](std::uint32_t& node) {
      (node < rows_ ? minus_ : plus_).push_back(parent_slot_[node]);
      node = parent_node_[node];
    };
    auto step_from_col_side = [&](std::uint32_t& node) {
      (node >= rows_ ? minus_ : plus_).push_back(parent_slot_[node]);
      node = parent_node_[node];
    };
    while (depth_[x] > depth_[y]) step_from_row_side(x);
    while (depth_[y] > depth_[x]) step_from_col_side(y);
    while (x != y) {
      step_from_row_side(x);
      step_from_col_side(y);
    }

    double theta = kInf;
    for (std::uint32_t s : minus_) theta = std::min(theta, basic_[s].flow);
    std::uint32_t leave = kNone;
    std::size_t leave_arc = std::numeric_limits<std::size_t>::max();
    for (std::uint32_t s : minus_) {
      if (basic_[s].flow == theta && arc_index(basic_[s]) < leave_arc) {
        leave = s;
        leave_arc = arc_index(basic_[s]);
      }
    }

    if (theta > 0.0) {
      for (std::uint32_t s : minus_) {
        basic_[s].flow -= theta;
        if (basic_[s].flow <= kZeroMass) basic_[s].flow = 0.0;
      }
      for (std::uint32_t s : plus_) basic_[s].flow += theta;
    }
    basic_[leave].flow = 0.0;
    replace_slot(leave, e.i, e.j, theta);
    if (!rebuild_tree()) throw Error("network simplex: lost the spanning tree");

    ++stats_.pivots;
    if (theta == 0.0) {
      ++stats_.degenerate_pivots;
      ++degenerate_run_;
      // A repeated basis inside a run of degenerate pivots is a cycle.
      if (!bland_ && (!seen_.insert(hash_).second ||
                      degenerate_run_ > 50 * static_cast<std::int64_t>(nodes_))) {
        bland_ = true;
        stats_.bland_engaged = true;
      }
    } else {
      degenerate_run_ = 0;
      seen_.clear();
    }
  }

  void report(std::int64_t pivot_no) {
    if (!opt_.on_iterate) return;
    IterateInfo info;
    info.pivot = pivot_no;
    info.phase = phase_ == Phase::Feasibility ? 1 : 2;
    for (const auto& s : basic_) info.primal += tree_cost(s) * s.flow;
    for (std::size_t i = 0; i < rows_; ++i) info.dual += pot_[i] * supply_[i];
    for (std::size_t j = 0; j < cols_; ++j) info.dual += pot_[rows_ + j] * demand_[j];
    opt_.on_iterate(info);
  }

  void optimize() {
    report(stats_.pivots);
    while (true) {
      const auto e = bland_ ? price_bland() : price_block();
      if (!e) return;
      if (stats_.pivots >= cap_) {
        throw SolverError("network simplex: no convergence after " +
                              std::to_string(stats_.pivots) + " pivots",
                          stats_.pivots);
      }
      pivot(*e);
      report(stats_.pivots);
    }
  }

  SimplexOutput collect() const {
    SimplexOutput out;
    out.basis.reserve(basic_.size());
    for (const auto& s : basic_) {
      out.basis.push_back({s.i, s.j, s.flow, s.flow == 0.0});
    }
    out.u.assign(pot_.begin(), pot_.begin() + static_cast<std::ptrdiff_t>(rows_));
    out.v.assign(pot_.begin() + static_cast<std::ptrdiff_t>(rows_), pot_.end());
    out.stats = stats_;
    return out;
  }

  std::size_t rows_, cols_, nodes_;
  std::span<const double> supply_, demand_;
  const CostMatrix& cost_;
  const SolverOptions& opt_;
  const simd::KernelTable& k_;

  Phase phase_ = Phase::Optimality;
  std::vector<double> price_;
  double tol_ = 0.0;
  std::int64_t cap_ = 0;

  std::vector<Slot> basic_;
  std::vector<std::vector<std::uint32_t>> adj_;
  std::vector<std::uint32_t> parent_slot_, parent_node_, depth_, order_;
  std::vector<double> pot_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t cur_stamp_ = 0;
  std::vector<std::uint32_t> minus_, plus_;

  std::size_t next_row_ = 0;
  bool bland_ = false;
  std::uint64_t hash_ = 0;
  std::unordered_set<std::uint64_t> seen_;
  std::int64_t degenerate_run_ = 0;
  SolverStats stats_;
};

}  // namespace

SimplexOutput run_network_simplex(const SimplexInput& input) {
  Simplex simplex(input);
  return simplex.run();
}

}  // namespace crystal_ot::detail
