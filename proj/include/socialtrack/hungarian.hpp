#pragma once

// Minimum-cost rectangular assignment (Kuhn-Munkres with potentials).
//
// Ties between optimal assignments are broken deterministically: among all
// optimal assignments of the square zero-padded problem, the one whose column
// sequence (row 0, row 1, ...) is lexicographically smallest is returned.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace socialtrack {

using MatchPair = std::pair<int, int>;  // (row, col)

namespace detail {

class TightGraphRefiner {
 public:
  TightGraphRefiner(const Eigen::MatrixXd& c, const std::vector<double>& u, const std::vector<double>& v,
                    std::vector<int>& col_of, double tol)
      : c_(c), u_(u), v_(v), col_of_(col_of), tol_(tol), n_(static_cast<int>(c.rows())) {
    row_of_.assign(n_, -1);
    for (int i = 0; i < n_; ++i) row_of_[col_of_[i]] = i;
  }

  void run() {
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < col_of_[i]; ++j) {
        if (!tight(i, j) || row_of_[j] < i) continue;
        if (reroute(i, j)) break;
      }
    }
  }

 private:
  bool tight(int i, int j) const { return c_(i, j) - u_[i + 1] - v_[j + 1] <= tol_; }

  // Tries to give column j to row i, re-matching only rows > i on tight edges.
  bool reroute(int i, int j) {
    const int freed = col_of_[i];
    visited_.assign(n_, false);
    visited_[j] = true;
    path_.clear();
    if (!search(row_of_[j], i, freed)) return false;
    // path_ holds (row, new col) moves from the owner of j down to the row that
    // takes the freed column.
    for (const auto& [r, col] : path_) {
      col_of_[r] = col;
      row_of_[col] = r;
    }
    col_of_[i] = j;
    row_of_[j] = i;
    return true;
  }

  bool search(int r, int fixed_upto, int target) {
    for (int col = 0; col < n_; ++col) {
      if (visited_[col] || !tight(r, col)) continue;
      visited_[col] = true;
      if (col == target) {
        path_.emplace_back(r, col);
        return true;
      }
      const int owner = row_of_[col];
      if (owner <= fixed_upto) continue;
      path_.emplace_back(r, col);
      if (search(owner, fixed_upto, target)) return true;
      path_.pop_back();
    }
    return false;
  }

  const Eigen::MatrixXd& c_;
  const std::vector<double>& u_;
  const std::vector<double>& v_;
  std::vector<int>& col_of_;
  double tol_;
  int n_;
  std::vector<int> row_of_;
  std::vector<bool> visited_;
  std::vector<MatchPair> path_;
};

}  // namespace detail

/// Solves min-cost assignment on an m x n matrix of finite costs. Returns
/// min(m, n) pairs sorted by row.
inline std::vector<MatchPair> hungarian(const Eigen::MatrixXd& cost) {
  const int m = static_cast<int>(cost.rows());
  const int n = static_cast<int>(cost.cols());
  if (m == 0 || n == 0) return {};
  const int N = std::max(m, n);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(N, N);
  c.topLeftCorner(m, n) = cost;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(N + 1, 0.0), v(N + 1, 0.0);
  std::vector<int> p(N + 1, 0), way(N + 1, 0);
  for (int i = 1; i <= N; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(N + 1, inf);
    std::vector<bool> used(N + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= N; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= N; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> col_of(N, -1);
  for (int j = 1; j <= N; ++j) col_of[p[j] - 1] = j - 1;

  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  detail::TightGraphRefiner(c, u, v, col_of, 1e-9 * scale * N).run();

  std::vector<MatchPair> out;
  out.reserve(std::min(m, n));
  for (int i = 0; i < m; ++i) {
    if (col_of[i] < n) out.emplace_back(i, col_of[i]);
  }
  return out;
}

inline double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<MatchPair>& pairs) {
  double total = 0.0;
  for (const auto& [r, c] : pairs) total += cost(r, c);
  return total;
}

}  // namespace socialtrack
