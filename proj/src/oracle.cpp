#include "vodsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vodsim {

namespace {

using Real = long double;
constexpr Real kTol = 1e-13L;

// Tableau over n original + m slack columns (+ one auxiliary in phase 1).
class Simplex {
 public:
  Simplex(const LinearProgram& p)
      : m_(p.b.size()), n_(p.c.size()) {
    cols_ = n_ + m_ + 1;  // last column: auxiliary x0
    t_.assign(m_, std::vector<Real>(cols_ + 1, 0.0L));
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      if (p.a[i].size() != n_) throw LpError("ragged constraint matrix");
      for (std::size_t j = 0; j < n_; ++j) t_[i][j] = p.a[i][j];
      t_[i][n_ + i] = 1.0L;
      t_[i][cols_ - 1] = -1.0L;
      t_[i][cols_] = p.b[i];
      basis_[i] = n_ + i;
    }
    c_.assign(p.c.begin(), p.c.end());
  }

  LpSolution solve() {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < m_; ++i) {
      if (t_[i][cols_] < t_[worst][cols_]) worst = i;
    }
    if (m_ > 0 && t_[worst][cols_] < -kTol) {
      // Phase 1: maximize -x0 starting from the most negative row.
      std::vector<Real> aux(cols_, 0.0L);
      aux[cols_ - 1] = -1.0L;
      pivot(worst, cols_ - 1);
      run(aux, /*allow_aux=*/true);
      if (value_of(cols_ - 1) > 1e-9L) throw LpError("infeasible program");
      // Drive x0 out of the basis if it lingers at zero.
      for (std::size_t i = 0; i < m_; ++i) {
        if (basis_[i] != cols_ - 1) continue;
        for (std::size_t j = 0; j + 1 < cols_; ++j) {
          if (std::fabs(t_[i][j]) > kTol) {
            pivot(i, j);
            break;
          }
        }
      }
    }
    std::vector<Real> obj(cols_, 0.0L);
    for (std::size_t j = 0; j < n_; ++j) obj[j] = c_[j];
    run(obj, /*allow_aux=*/false);

    LpSolution out;
    out.x.resize(n_);
    Real total = 0.0L;
    for (std::size_t j = 0; j < n_; ++j) {
      Real v = value_of(j);
      out.x[j] = static_cast<double>(v);
      total += c_[j] * v;
    }
    out.objective = static_cast<double>(total);
    return out;
  }

 private:
  Real value_of(std::size_t col) const {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] == col) return t_[i][cols_];
    }
    return 0.0L;
  }

  void pivot(std::size_t row, std::size_t col) {
    Real p = t_[row][col];
    for (auto& v : t_[row]) v /= p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      Real f = t_[i][col];
      if (f == 0.0L) continue;
      for (std::size_t j = 0; j <= cols_; ++j) t_[i][j] -= f * t_[row][j];
      t_[i][col] = 0.0L;
    }
    basis_[row] = col;
  }

  void run(const std::vector<Real>& obj, bool allow_aux) {
    const std::size_t usable = allow_aux ? cols_ : cols_ - 1;
    for (std::size_t iter = 0; iter < 100000; ++iter) {
      // Bland: lowest-index column with positive reduced cost.
      std::size_t enter = usable;
      for (std::size_t j = 0; j < usable; ++j) {
        Real reduced = obj[j];
        for (std::size_t i = 0; i < m_; ++i) reduced -= obj[basis_[i]] * t_[i][j];
        if (reduced > kTol) {
          enter = j;
          break;
        }
      }
      if (enter == usable) return;
      std::size_t leave = m_;
      Real best = std::numeric_limits<Real>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        if (t_[i][enter] <= kTol) continue;
        Real ratio = t_[i][cols_] / t_[i][enter];
        if (ratio < best - kTol ||
            (ratio <= best + kTol && leave < m_ && basis_[i] < basis_[leave])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave == m_) throw LpError("unbounded program");
      pivot(leave, enter);
    }
    throw LpError("simplex iteration limit reached");
  }

  std::size_t m_, n_, cols_;
  std::vector<std::vector<Real>> t_;
  std::vector<std::size_t> basis_;
  std::vector<Real> c_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& program) {
  if (program.a.size() != program.b.size()) {
    throw LpError("constraint matrix and bound vector disagree");
  }
  return Simplex(program).solve();
}

Opt2Solution solve_opt2_lp(std::span<const double> popularity, double load,
                           std::size_t storage) {
  const std::size_t n = popularity.size();
  // Columns: m_c at c, lambda_c at n + c, x_c at 2n + c.
  auto m = [](std::size_t c) { return c; };
  auto lam = [n](std::size_t c) { return n + c; };
  auto x = [n](std::size_t c) { return 2 * n + c; };

  LinearProgram lp;
  lp.c.assign(3 * n, 0.0);
  auto row = [&](std::initializer_list<std::pair<std::size_t, double>> terms,
                 double bound) {
    std::vector<double> r(3 * n, 0.0);
    for (auto [j, v] : terms) r[j] += v;
    lp.a.push_back(std::move(r));
    lp.b.push_back(bound);
  };
  std::vector<double> sum_m(3 * n, 0.0), sum_lam(3 * n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    double rho_c = load * popularity[c];
    lp.c[m(c)] = rho_c;
    lp.c[x(c)] = 1.0;
    row({{m(c), 1.0}}, 1.0);
    row({{lam(c), 1.0}, {m(c), -1.0}}, 0.0);
    row({{x(c), 1.0}, {lam(c), -1.0}}, 0.0);
    row({{x(c), 1.0}, {m(c), rho_c}}, rho_c);
    sum_m[m(c)] = 1.0;
    sum_lam[lam(c)] = 1.0;
  }
  lp.a.push_back(sum_m);
  lp.b.push_back(static_cast<double>(storage));
  for (double& v : sum_m) v = -v;
  lp.a.push_back(sum_m);
  lp.b.push_back(-static_cast<double>(storage));
  lp.a.push_back(sum_lam);
  lp.b.push_back(1.0);

  auto sol = solve_lp(lp);
  Opt2Solution out;
  out.objective = sol.objective;
  for (std::size_t c = 0; c < n; ++c) {
    out.cache_fraction.push_back(sol.x[m(c)]);
    out.bandwidth_fraction.push_back(sol.x[lam(c)]);
    out.served_load.push_back(sol.x[x(c)]);
  }
  return out;
}

double opt2_max_violation(const WaterFilling& s, std::size_t storage) {
  double worst = 0.0;
  auto over = [&](double lhs, double rhs) { worst = std::max(worst, lhs - rhs); };
  double sum_m = 0.0, sum_lam = 0.0;
  for (std::size_t c = 0; c < s.cache_fraction.size(); ++c) {
    double m = s.cache_fraction[c], lam = s.bandwidth_fraction[c], x = s.served_load[c];
    over(0.0, m);
    over(m, 1.0);
    over(0.0, lam);
    over(lam, m);
    over(0.0, x);
    over(x, lam);
    over(x, s.content_load[c] * (1.0 - m));
    sum_m += m;
    sum_lam += lam;
  }
  over(sum_m, static_cast<double>(storage));
  over(sum_lam, 1.0);
  return worst;
}

}  // namespace vodsim
