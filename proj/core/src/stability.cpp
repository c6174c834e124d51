#include "brickplan/stability.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "brickplan/lp.hpp"

namespace brickplan {

namespace {

constexpr double kCornerOffset = 0.25;
// Margins this close to zero are rounding noise on an exact D_max = F_T tie.
constexpr double kMarginSnap = 1e-9;
constexpr double kCornerDx[4] = {-kCornerOffset, kCornerOffset, -kCornerOffset, kCornerOffset};
constexpr double kCornerDy[4] = {-kCornerOffset, -kCornerOffset, kCornerOffset, kCornerOffset};

bool touches_below(ContactSide s) { return s != ContactSide::Above; }
bool touches_above(ContactSide s) { return s != ContactSide::Below; }

// Body occupying a cell across real and virtual bricks, or -2 for none.
struct BodyLookup {
    const BrickStructure& s;
    std::span<const VirtualBrick> loads;

    int at(const Cell& c) const {
        if (auto o = s.occupant(c)) return *o;
        for (std::size_t k = 0; k < loads.size(); ++k) {
            const Brick& b = loads[k].footprint;
            if (b.z == c.z && b.covers_column(c.x, c.y)) return static_cast<int>(s.size() + k);
        }
        return -2;
    }
};

struct BodySums {
    double force = 0.0;
    double tx = 0.0;
    double ty = 0.0;
};

// Net upward force and torques applied by the contacts, minus the weight.
std::vector<BodySums> body_residuals(const ForceModel& m, std::span<const double> normal,
                                     std::span<const double> tension) {
    std::vector<BodySums> r(static_cast<std::size_t>(m.body_count()));
    for (std::size_t p = 0; p < m.points.size(); ++p) {
        const auto& pt = m.points[p];
        const double f = normal[p] - tension[p];
        auto& up = r[static_cast<std::size_t>(pt.upper)];
        up.force += f;
        up.tx += (pt.py - m.cy[static_cast<std::size_t>(pt.upper)]) * f;
        up.ty += (pt.px - m.cx[static_cast<std::size_t>(pt.upper)]) * f;
        if (pt.lower >= 0) {
            auto& lo = r[static_cast<std::size_t>(pt.lower)];
            lo.force -= f;
            lo.tx -= (pt.py - m.cy[static_cast<std::size_t>(pt.lower)]) * f;
            lo.ty -= (pt.px - m.cx[static_cast<std::size_t>(pt.lower)]) * f;
        }
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i < m.capped.size() && m.capped[i]) {
            const double lo = std::min(m.weight[i], 0.0), hi = std::max(m.weight[i], 0.0);
            r[i].force = r[i].force < lo ? r[i].force - lo : r[i].force > hi ? r[i].force - hi : 0.0;
        } else {
            r[i].force -= m.weight[i];
        }
    }
    return r;
}

double drag_max(const ForceModel& m, std::span<const double> tension, int body) {
    double d = 0.0;
    for (int p : m.drag_points[static_cast<std::size_t>(body)]) d = std::max(d, tension[static_cast<std::size_t>(p)]);
    return d;
}

// LP over (n, t) per point, residual splits per body row, drag bound per body,
// and lazily generated rows t_p - m_i + s = 0.
class ForceLp {
public:
    ForceLp(const ForceModel& m, const SolverConfig& cfg) : m_(m), cfg_(cfg) {
        const int nb = m.body_count();
        for (int i = 0; i < nb; ++i) {
            lp_.add_row(m.weight[static_cast<std::size_t>(i)]);
            lp_.add_row(0.0);
            lp_.add_row(0.0);
        }
        for (const auto& pt : m.points) {
            std::vector<std::pair<int, double>> e;
            const int u = pt.upper;
            e.push_back({3 * u, 1.0});
            e.push_back({3 * u + 1, pt.py - m.cy[static_cast<std::size_t>(u)]});
            e.push_back({3 * u + 2, pt.px - m.cx[static_cast<std::size_t>(u)]});
            if (pt.lower >= 0) {
                const int l = pt.lower;
                e.push_back({3 * l, -1.0});
                e.push_back({3 * l + 1, -(pt.py - m.cy[static_cast<std::size_t>(l)])});
                e.push_back({3 * l + 2, -(pt.px - m.cx[static_cast<std::size_t>(l)])});
            }
            auto neg = e;
            for (auto& [row, v] : neg) v = -v;
            lp_.add_column(0.0, std::move(e));
            lp_.add_column(cfg.beta, std::move(neg));
        }
        basis_.resize(static_cast<std::size_t>(3 * nb));
        for (int r = 0; r < 3 * nb; ++r) {
            int plus = lp_.add_column(1.0, {{r, 1.0}});
            int minus = lp_.add_column(1.0, {{r, -1.0}});
            basis_[static_cast<std::size_t>(r)] = lp_.rhs[static_cast<std::size_t>(r)] >= 0 ? plus : minus;
        }
        for (int i = 0; i < nb; ++i) {
            const double w = m.weight[static_cast<std::size_t>(i)];
            if (static_cast<std::size_t>(i) >= m.capped.size() || !m.capped[static_cast<std::size_t>(i)] || w == 0.0)
                continue;
            // Unused part of the weight, at most |w|.
            int row = lp_.add_row(std::abs(w));
            lp_.add_column(0.0, {{3 * i, w < 0 ? -1.0 : 1.0}, {row, 1.0}});
            basis_.push_back(lp_.add_column(0.0, {{row, 1.0}}));
        }
        drag_col_.assign(static_cast<std::size_t>(nb), -1);
        for (int i = 0; i < nb; ++i)
            if (!m.drag_points[static_cast<std::size_t>(i)].empty()) drag_col_[static_cast<std::size_t>(i)] = lp_.add_column(cfg.alpha);
        has_cut_.assign(m.points.size(), 0);
    }

    int point_columns() const { return 2 * static_cast<int>(m_.points.size()); }

    // Solves with the given point fixings, adding drag rows until none is violated.
    LpResult solve(std::span<const char> disabled, int& solves) {
        for (;;) {
            LpResult r = solve_lp(lp_, basis_, disabled);
            ++solves;
            if (r.status != LpStatus::Optimal)
                throw StabilityError(StabilityError::Kind::SolverFailure, "force LP did not reach an optimum");
            if (!add_violated_cuts(r.x)) return r;
        }
    }

    double tension(const LpResult& r, std::size_t p) const { return r.x[2 * p + 1]; }
    double normal(const LpResult& r, std::size_t p) const { return r.x[2 * p]; }

private:
    bool add_violated_cuts(const std::vector<double>& x) {
        bool added = false;
        for (int i = 0; i < m_.body_count(); ++i) {
            const int mc = drag_col_[static_cast<std::size_t>(i)];
            if (mc < 0) continue;
            const double bound = x[static_cast<std::size_t>(mc)];
            for (int p : m_.drag_points[static_cast<std::size_t>(i)]) {
                if (has_cut_[static_cast<std::size_t>(p)]) continue;
                if (x[static_cast<std::size_t>(2 * p + 1)] <= bound + 1e-9) continue;
                int row = lp_.add_row(0.0);
                lp_.columns[static_cast<std::size_t>(2 * p + 1)].entries.push_back({row, 1.0});
                lp_.columns[static_cast<std::size_t>(mc)].entries.push_back({row, -1.0});
                basis_.push_back(lp_.add_column(0.0, {{row, 1.0}}));
                has_cut_[static_cast<std::size_t>(p)] = 1;
                added = true;
            }
        }
        return added;
    }

    const ForceModel& m_;
    const SolverConfig& cfg_;
    LpProblem lp_;
    std::vector<int> basis_;
    std::vector<int> drag_col_;
    std::vector<char> has_cut_;
};

struct BbNode {
    double bound;
    long order;
    std::vector<char> disabled;
};

struct BbNodeCmp {
    bool operator()(const BbNode& a, const BbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.order > b.order;
    }
};

int most_violated(const ForceLp& flp, const LpResult& r, std::size_t npoints, double eps) {
    int best = -1;
    double worst = eps;
    for (std::size_t p = 0; p < npoints; ++p) {
        double v = std::min(flp.normal(r, p), flp.tension(r, p));
        if (v > worst) {
            worst = v;
            best = static_cast<int>(p);
        }
    }
    return best;
}

BodyReport make_report(const BodySums& r, double dmax, const SolverConfig& cfg, bool scored) {
    BodyReport b;
    b.force_residual = std::abs(r.force);
    b.torque_residual_x = r.tx;
    b.torque_residual_y = r.ty;
    b.d_max = dmax;
    const double eps = cfg.residual_tolerance;
    if (!scored) {
        b.score = 0.0;
    } else if (b.force_residual > eps || b.torque_norm() > eps ||
               dmax >= cfg.friction_capacity * (1.0 - kMarginSnap)) {
        b.score = 0.0;
    } else {
        b.score = (cfg.friction_capacity - dmax) / cfg.friction_capacity;
    }
    return b;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(alpha > 0 && beta > 0 && friction_capacity > 0 && residual_tolerance > 0 && unit_mass > 0 &&
          gravity > 0))
        throw std::invalid_argument("solver parameters alpha, beta, F_T, eps, unit_mass, g must be > 0");
    if (node_budget < 1) throw std::invalid_argument("solver node_budget must be >= 1");
}

double BodyReport::torque_norm() const { return std::hypot(torque_residual_x, torque_residual_y); }

std::vector<double> StabilitySolution::scores() const {
    std::vector<double> out;
    out.reserve(bricks.size());
    for (const auto& b : bricks) out.push_back(b.score);
    return out;
}

std::vector<int> StabilitySolution::failing() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < bricks.size(); ++i)
        if (!(bricks[i].score > 0.0)) out.push_back(static_cast<int>(i));
    return out;
}

ForceModel build_force_model(const BrickStructure& s, const SolverConfig& cfg,
                             std::span<const VirtualBrick> loads) {
    for (std::size_t k = 0; k < loads.size(); ++k) {
        const Brick& b = loads[k].footprint;
        if (!s.world().contains(b))
            throw StructureError(StructureError::Kind::OutOfBounds,
                                 "virtual brick " + serialize_brick_line(b) + " is outside the world");
        if (auto hit = s.first_collision(b))
            throw StructureError(StructureError::Kind::Collision,
                                 "virtual brick " + serialize_brick_line(b) + " collides with brick " +
                                     std::to_string(*hit),
                                 *hit);
        for (std::size_t j = 0; j < k; ++j) {
            const Brick& o = loads[j].footprint;
            if (o.z != b.z) continue;
            bool overlap = b.x < o.x + o.x_extent() && o.x < b.x + b.x_extent() && b.y < o.y + o.y_extent() &&
                           o.y < b.y + b.y_extent();
            if (overlap)
                throw StructureError(StructureError::Kind::Collision,
                                     "virtual bricks " + std::to_string(j) + " and " + std::to_string(k) +
                                         " overlap");
        }
    }

    ForceModel m;
    const int nreal = static_cast<int>(s.size());
    const int nbody = nreal + static_cast<int>(loads.size());
    m.real_count = nreal;
    m.weight.resize(static_cast<std::size_t>(nbody));
    m.capped.assign(static_cast<std::size_t>(nbody), 0);
    for (std::size_t k = 0; k < loads.size(); ++k) m.capped[static_cast<std::size_t>(nreal) + k] = loads[k].capped;
    m.cx.resize(static_cast<std::size_t>(nbody));
    m.cy.resize(static_cast<std::size_t>(nbody));
    m.drag_points.resize(static_cast<std::size_t>(nbody));

    auto body_brick = [&](int i) -> const Brick& {
        return i < nreal ? s[static_cast<std::size_t>(i)] : loads[static_cast<std::size_t>(i - nreal)].footprint;
    };
    auto is_virtual = [&](int i) { return i >= nreal; };
    auto side = [&](int i) { return loads[static_cast<std::size_t>(i - nreal)].contacts; };

    for (int i = 0; i < nbody; ++i) {
        const Brick& b = body_brick(i);
        m.cx[static_cast<std::size_t>(i)] = b.centroid_x();
        m.cy[static_cast<std::size_t>(i)] = b.centroid_y();
        const double mass = is_virtual(i) ? loads[static_cast<std::size_t>(i - nreal)].mass
                                          : static_cast<double>(b.type.stud_count());
        m.weight[static_cast<std::size_t>(i)] = mass * cfg.unit_mass * cfg.gravity;
    }

    BodyLookup lookup{s, loads};
    for (int i = 0; i < nbody; ++i) {
        if (is_virtual(i) && !touches_below(side(i))) continue;
        const Brick& b = body_brick(i);
        for (const auto& c : b.cells()) {
            int lower;
            if (c.z == 0) {
                if (!s.world().baseplate) continue;
                lower = kBaseplate;
            } else {
                lower = lookup.at({c.x, c.y, c.z - 1});
                if (lower == -2) continue;
                if (is_virtual(lower) && !touches_above(side(lower))) continue;
            }
            for (int k = 0; k < 4; ++k) {
                ContactPoint p;
                p.lower = lower;
                p.upper = i;
                p.cell = c;
                p.corner = k;
                p.px = c.x + 0.5 + kCornerDx[k];
                p.py = c.y + 0.5 + kCornerDy[k];
                m.drag_points[static_cast<std::size_t>(i)].push_back(static_cast<int>(m.points.size()));
                m.points.push_back(p);
            }
        }
    }
    return m;
}

double force_objective(const ForceModel& m, const SolverConfig& cfg, std::span<const double> normal,
                       std::span<const double> tension) {
    auto res = body_residuals(m, normal, tension);
    double obj = 0.0;
    for (int i = 0; i < m.body_count(); ++i) {
        const auto& r = res[static_cast<std::size_t>(i)];
        obj += std::abs(r.force) + std::abs(r.tx) + std::abs(r.ty);
        obj += cfg.alpha * drag_max(m, tension, i);
    }
    for (double t : tension) obj += cfg.beta * t;
    return obj;
}

StabilitySolution solve_force_distribution(const ForceModel& m, const SolverConfig& cfg) {
    StabilitySolution sol;
    const std::size_t np = m.points.size();
    const double eps = cfg.residual_tolerance;

    ForceLp flp(m, cfg);
    std::vector<double> best_n, best_t;
    double incumbent = std::numeric_limits<double>::infinity();

    std::priority_queue<BbNode, std::vector<BbNode>, BbNodeCmp> open;
    long order = 0;
    open.push({0.0, order++, {}});
    while (!open.empty()) {
        BbNode node = open.top();
        open.pop();
        if (node.bound >= incumbent - 1e-12) continue;
        if (sol.bb_nodes >= cfg.node_budget)
            throw StabilityError(StabilityError::Kind::IterationLimit,
                                 "complementarity branching exceeded its node budget");
        ++sol.bb_nodes;
        LpResult r = flp.solve(node.disabled, sol.lp_solves);
        if (r.objective >= incumbent - 1e-12) continue;
        int p = most_violated(flp, r, np, eps);
        if (p < 0) {
            incumbent = r.objective;
            best_n.resize(np);
            best_t.resize(np);
            for (std::size_t q = 0; q < np; ++q) {
                best_n[q] = flp.normal(r, q);
                best_t[q] = flp.tension(r, q);
            }
            continue;
        }
        for (int which = 0; which < 2; ++which) {
            BbNode child{r.objective, order++, node.disabled};
            child.disabled.resize(static_cast<std::size_t>(flp.point_columns()), 0);
            child.disabled[static_cast<std::size_t>(2 * p + which)] = 1;
            open.push(std::move(child));
        }
    }
    if (!std::isfinite(incumbent))
        throw StabilityError(StabilityError::Kind::SolverFailure, "no complementary force distribution found");

    // Exact complementarity: remove the common part of any co-active pair.
    for (std::size_t q = 0; q < np; ++q) {
        double c = std::min(best_n[q], best_t[q]);
        best_n[q] -= c;
        best_t[q] -= c;
    }
    sol.normal = std::move(best_n);
    sol.tension = std::move(best_t);
    sol.objective = force_objective(m, cfg, sol.normal, sol.tension);

    auto res = body_residuals(m, sol.normal, sol.tension);
    sol.stable = true;
    for (int i = 0; i < m.body_count(); ++i) {
        const bool real = i < m.real_count;
        auto rep = make_report(res[static_cast<std::size_t>(i)], drag_max(m, sol.tension, i), cfg, real);
        if (real) {
            if (!(rep.score > 0.0)) sol.stable = false;
            sol.bricks.push_back(rep);
        } else {
            if (rep.force_residual > eps || rep.torque_norm() > eps) sol.stable = false;
            sol.virtual_bodies.push_back(rep);
        }
    }
    return sol;
}

StabilitySolution stability(const BrickStructure& s, const SolverConfig& cfg) {
    return solve_force_distribution(build_force_model(s, cfg), cfg);
}

StabilitySolution stability_with_virtual_bricks(const BrickStructure& s, std::span<const VirtualBrick> loads,
                                                const SolverConfig& cfg) {
    return solve_force_distribution(build_force_model(s, cfg, loads), cfg);
}

nlohmann::json solver_config_to_json(const SolverConfig& cfg) {
    return {{"alpha", cfg.alpha},
            {"beta", cfg.beta},
            {"friction_capacity", cfg.friction_capacity},
            {"residual_tolerance", cfg.residual_tolerance},
            {"unit_mass", cfg.unit_mass},
            {"gravity", cfg.gravity},
            {"node_budget", cfg.node_budget}};
}

nlohmann::json stability_to_json(const StabilitySolution& sol) {
    auto body = [](const BodyReport& b) {
        return nlohmann::json{{"force_residual", b.force_residual},
                              {"torque_residual", {b.torque_residual_x, b.torque_residual_y}},
                              {"d_max", b.d_max},
                              {"score", b.score}};
    };
    nlohmann::json bricks = nlohmann::json::array();
    for (const auto& b : sol.bricks) bricks.push_back(body(b));
    nlohmann::json virt = nlohmann::json::array();
    for (const auto& b : sol.virtual_bodies) {
        auto j = body(b);
        j.erase("score");
        virt.push_back(std::move(j));
    }
    return {{"stable", sol.stable},
            {"scores", sol.scores()},
            {"failing", sol.failing()},
            {"objective", sol.objective},
            {"bricks", std::move(bricks)},
            {"virtual", std::move(virt)},
            {"lp_solves", sol.lp_solves},
            {"bb_nodes", sol.bb_nodes}};
}

}  // namespace brickplan
