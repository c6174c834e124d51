#include "brickplan/lp.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace brickplan {

namespace {

class Simplex {
public:
    Simplex(const LpProblem& lp, std::span<const int> basis, std::span<const char> disabled,
            const LpOptions& opt)
        : lp_(lp), opt_(opt), m_(lp.rows()), n_(lp.cols()), basis_(basis.begin(), basis.end()),
          disabled_(disabled) {
        b_ = Eigen::Map<const Eigen::VectorXd>(lp.rhs.data(), m_);
        is_basic_.assign(static_cast<std::size_t>(n_), 0);
        for (int j : basis_) is_basic_[static_cast<std::size_t>(j)] = 1;
        cb_.resize(m_);
        y_.resize(m_);
        d_.resize(m_);
    }

    LpResult run() {
        LpResult res;
        if (m_ == 0) {
            res.status = LpStatus::Optimal;
            res.x.assign(static_cast<std::size_t>(n_), 0.0);
            return res;
        }
        if (!refactor()) return res;
        for (int i = 0; i < m_; ++i) {
            if (xb_[i] < -1e-9) return res;  // caller handed an infeasible basis
        }
        const int limit = opt_.max_iterations > 0 ? opt_.max_iterations : 50 * (m_ + n_) + 1000;
        int since_refactor = 0;
        int degenerate_run = 0;
        bool bland = false;
        int it = 0;
        for (; it < limit; ++it) {
            if (since_refactor >= opt_.refactor_interval) {
                if (!refactor()) {
                    res.status = LpStatus::IterationLimit;
                    return res;
                }
                since_refactor = 0;
            }
            for (int i = 0; i < m_; ++i) cb_[i] = lp_.columns[static_cast<std::size_t>(basis_[i])].cost;
            y_.noalias() = binv_.transpose() * cb_;

            int q = price(bland);
            if (q < 0) break;

            column_times_binv(q);
            int r = ratio(bland);
            if (r < 0) {
                res.status = LpStatus::Unbounded;
                res.iterations = it;
                return res;
            }
            const double step = xb_[r] / d_[r];
            if (step <= 1e-12) {
                if (++degenerate_run > 40) bland = true;
            } else {
                degenerate_run = 0;
                bland = false;
            }
            pivot(q, r, step);
            ++since_refactor;
        }
        if (it >= limit) {
            res.status = LpStatus::IterationLimit;
            res.iterations = it;
            return res;
        }
        // Final solve from a fresh factorization.
        if (!refactor()) {
            res.status = LpStatus::IterationLimit;
            return res;
        }
        res.status = LpStatus::Optimal;
        res.iterations = it;
        res.x.assign(static_cast<std::size_t>(n_), 0.0);
        for (int i = 0; i < m_; ++i) res.x[static_cast<std::size_t>(basis_[i])] = std::max(0.0, xb_[i]);
        double obj = 0.0;
        for (int j = 0; j < n_; ++j) obj += lp_.columns[static_cast<std::size_t>(j)].cost * res.x[static_cast<std::size_t>(j)];
        res.objective = obj;
        return res;
    }

private:
    bool refactor() {
        Eigen::MatrixXd bm = Eigen::MatrixXd::Zero(m_, m_);
        for (int i = 0; i < m_; ++i)
            for (auto [row, v] : lp_.columns[static_cast<std::size_t>(basis_[i])].entries) bm(row, i) = v;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bm);
        if (!std::isfinite(lu.determinant()) || std::abs(lu.determinant()) < 1e-300) return false;
        binv_ = lu.inverse();
        xb_ = lu.solve(b_);
        return true;
    }

    bool enabled(int j) const {
        return static_cast<std::size_t>(j) >= disabled_.size() || !disabled_[static_cast<std::size_t>(j)];
    }

    double reduced_cost(int j) const {
        const auto& col = lp_.columns[static_cast<std::size_t>(j)];
        double rc = col.cost;
        for (auto [row, v] : col.entries) rc -= y_[row] * v;
        return rc;
    }

    int price(bool bland) const {
        int best = -1;
        double best_rc = -opt_.optimality_tol;
        for (int j = 0; j < n_; ++j) {
            if (is_basic_[static_cast<std::size_t>(j)] || !enabled(j)) continue;
            double rc = reduced_cost(j);
            if (rc < best_rc) {
                best = j;
                if (bland) return j;
                best_rc = rc;
            }
        }
        return best;
    }

    void column_times_binv(int q) {
        d_.setZero();
        for (auto [row, v] : lp_.columns[static_cast<std::size_t>(q)].entries) d_ += binv_.col(row) * v;
    }

    int ratio(bool bland) const {
        int r = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m_; ++i) {
            if (d_[i] <= opt_.pivot_tol) continue;
            double t = std::max(0.0, xb_[i]) / d_[i];
            if (r < 0 || t < best - 1e-12) {
                r = i;
                best = t;
            } else if (t <= best + 1e-12) {
                bool take = bland ? basis_[i] < basis_[r] : d_[i] > d_[r];
                if (take) {
                    r = i;
                    best = std::min(best, t);
                }
            }
        }
        return r;
    }

    void pivot(int q, int r, double step) {
        xb_ -= step * d_;
        xb_[r] = step;
        Eigen::RowVectorXd pivot_row = binv_.row(r) / d_[r];
        binv_.noalias() -= d_ * pivot_row;
        binv_.row(r) = pivot_row;
        is_basic_[static_cast<std::size_t>(basis_[r])] = 0;
        basis_[r] = q;
        is_basic_[static_cast<std::size_t>(q)] = 1;
    }

    const LpProblem& lp_;
    LpOptions opt_;
    int m_;
    int n_;
    std::vector<int> basis_;
    std::span<const char> disabled_;
    std::vector<char> is_basic_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
    Eigen::VectorXd cb_;
    Eigen::VectorXd y_;
    Eigen::VectorXd d_;
};

}  // namespace

LpResult solve_lp(const LpProblem& lp, std::span<const int> initial_basis,
                  std::span<const char> disabled, const LpOptions& opt) {
    if (static_cast<int>(initial_basis.size()) != lp.rows()) {
        LpResult r;
        r.status = LpStatus::Infeasible;
        return r;
    }
    Simplex s(lp, initial_basis, disabled, opt);
    return s.run();
}

}  // namespace brickplan
