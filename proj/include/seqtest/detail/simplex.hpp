#pragma once

// Dense two-phase simplex for small equality-form LPs:
//     maximize c·w  subject to  A w = b,  w >= 0,  with b >= 0.
// Bland's rule throughout, so ties resolve to the lowest column index.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "seqtest/errors.hpp"

namespace seqtest::detail {

struct LpResult {
    bool feasible = false;
    double objective = 0.0;
    std::vector<double> solution;
};

class Tableau {
public:
    Tableau(const std::vector<std::vector<double>>& a, const std::vector<double>& b)
        : rows_(a.size()), cols_(a.empty() ? 0 : a.front().size()) {
        width_ = cols_ + rows_ + 1;
        cells_.assign((rows_ + 1) * width_, 0.0);
        basis_.resize(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            if (a[i].size() != cols_) throw DimensionError("simplex: ragged constraint matrix");
            if (b[i] < 0.0) throw ContractViolation("simplex: right-hand side must be nonnegative");
            for (std::size_t j = 0; j < cols_; ++j) at(i, j) = a[i][j];
            at(i, cols_ + i) = 1.0;
            at(i, width_ - 1) = b[i];
            basis_[i] = cols_ + i;
        }
        banned_.assign(width_ - 1, false);
    }

    // Maximizes cost·x over the current feasible region from the current basis.
    void optimize(const std::vector<double>& cost, double eps) {
        load_objective(cost);
        for (std::size_t iter = 0; iter < 50000; ++iter) {
            std::size_t enter = width_;
            for (std::size_t j = 0; j + 1 < width_; ++j)
                if (!banned_[j] && at(rows_, j) < -eps) {
                    enter = j;
                    break;
                }
            if (enter == width_) return;
            std::size_t leave = rows_;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < rows_; ++i) {
                const double coef = at(i, enter);
                if (coef <= eps) continue;
                const double ratio = at(i, width_ - 1) / coef;
                if (leave == rows_ || ratio < best_ratio - eps ||
                    (std::abs(ratio - best_ratio) <= eps && basis_[i] < basis_[leave])) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
            if (leave == rows_) throw ContractViolation("simplex: unbounded objective");
            pivot(leave, enter);
        }
        throw ContractViolation("simplex: iteration limit reached");
    }

    double objective_value() const { return at(rows_, width_ - 1); }

    // Moves remaining artificial variables out of the basis; rows where that is
    // impossible are redundant. Artificial columns are then never re-entered.
    void expel_artificials(double eps) {
        for (std::size_t i = 0; i < rows_; ++i) {
            if (basis_[i] < cols_) continue;
            for (std::size_t j = 0; j < cols_; ++j)
                if (std::abs(at(i, j)) > eps) {
                    pivot(i, j);
                    break;
                }
        }
        for (std::size_t j = cols_; j + 1 < width_; ++j) banned_[j] = true;
    }

    std::vector<double> solution() const {
        std::vector<double> x(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            if (basis_[i] < cols_) x[basis_[i]] = at(i, width_ - 1);
        return x;
    }

    std::size_t columns() const { return cols_; }
    std::size_t rows() const { return rows_; }

private:
    double& at(std::size_t i, std::size_t j) { return cells_[i * width_ + j]; }
    double at(std::size_t i, std::size_t j) const { return cells_[i * width_ + j]; }

    void load_objective(const std::vector<double>& cost) {
        for (std::size_t j = 0; j < width_; ++j) at(rows_, j) = j + 1 < width_ ? -cost[j] : 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            const double cb = cost[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < width_; ++j) at(rows_, j) += cb * at(i, j);
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        const double piv = at(r, c);
        for (std::size_t j = 0; j < width_; ++j) at(r, j) /= piv;
        for (std::size_t i = 0; i <= rows_; ++i) {
            if (i == r) continue;
            const double f = at(i, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(r, j);
        }
        basis_[r] = c;
    }

    std::size_t rows_;
    std::size_t cols_;
    std::size_t width_ = 0;
    std::vector<double> cells_;
    std::vector<std::size_t> basis_;
    std::vector<bool> banned_;
};

inline LpResult maximize_equality(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                                  const std::vector<double>& c, double eps = 1e-11, double feasibility_tol = 1e-9) {
    Tableau tab(a, b);
    const std::size_t n = tab.columns();
    const std::size_t m = tab.rows();
    if (c.size() != n) throw DimensionError("simplex: objective length differs from column count");

    std::vector<double> phase1(n + m, 0.0);
    for (std::size_t i = 0; i < m; ++i) phase1[n + i] = -1.0;
    tab.optimize(phase1, eps);
    LpResult result;
    if (tab.objective_value() < -feasibility_tol) return result;

    tab.expel_artificials(eps);
    std::vector<double> phase2(n + m, 0.0);
    for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
    tab.optimize(phase2, eps);
    result.feasible = true;
    result.solution = tab.solution();
    result.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) result.objective += c[j] * result.solution[j];
    return result;
}

}  // namespace seqtest::detail
