#pragma once

#include <span>
#include <utility>
#include <vector>

namespace brickplan {

// min c'x  s.t.  A x = b,  x >= 0.  Columns are stored sparse.
struct LpProblem {
    struct Column {
        double cost = 0.0;
        std::vector<std::pair<int, double>> entries;  // (row, value)
    };

    std::vector<double> rhs;
    std::vector<Column> columns;

    int add_row(double b) {
        rhs.push_back(b);
        return static_cast<int>(rhs.size()) - 1;
    }
    int add_column(double cost, std::vector<std::pair<int, double>> entries = {}) {
        columns.push_back({cost, std::move(entries)});
        return static_cast<int>(columns.size()) - 1;
    }
    int rows() const { return static_cast<int>(rhs.size()); }
    int cols() const { return static_cast<int>(columns.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    int iterations = 0;
};

struct LpOptions {
    int max_iterations = 0;  // 0 = 50 * (rows + cols)
    int refactor_interval = 64;
    double optimality_tol = 1e-10;
    double pivot_tol = 1e-9;
};

// Revised primal simplex with a dense basis inverse.
// initial_basis holds one column per row; it must be nonsingular and primal
// feasible (B^-1 b >= 0). Columns flagged in `disabled` are held at zero; the
// flag vector may be shorter than the column count.
LpResult solve_lp(const LpProblem& lp, std::span<const int> initial_basis,
                  std::span<const char> disabled = {}, const LpOptions& opt = {});

}  // namespace brickplan
