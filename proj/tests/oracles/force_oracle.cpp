#include "oracles/force_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "oracles/dense_lp.hpp"

namespace oracle {

using namespace brickplan;

namespace {

struct Body {
    int x0, x1, y0, y1, z;  // half-open footprint
    double w;
    double cx, cy;
    bool virt;
    ContactSide side;
    bool capped = false;
};

struct Pt {
    int lo;  // -1 baseplate
    int up;
    double x, y;
};

}  // namespace

OracleForces exhaustive_forces(const BrickStructure& s, const SolverConfig& cfg, std::span<const VirtualBrick> loads) {
    std::vector<Body> bodies;
    auto add = [&](const Brick& b, double mass, bool virt, ContactSide side, bool capped) {
        Body o{b.x, b.x + b.x_extent(), b.y, b.y + b.y_extent(), b.z, mass * cfg.unit_mass * cfg.gravity, 0, 0, virt, side, capped};
        o.cx = 0.5 * (o.x0 + o.x1);
        o.cy = 0.5 * (o.y0 + o.y1);
        bodies.push_back(o);
    };
    for (const auto& b : s.bricks()) add(b, b.type.width_studs * b.type.length_studs, false, ContactSide::Both, false);
    for (const auto& v : loads) add(v.footprint, v.mass, true, v.contacts, v.capped);
    const int nb = static_cast<int>(bodies.size());

    std::vector<Pt> pts;
    auto corners = [&](int lo, int up, int cx, int cy) {
        for (double dx : {0.25, 0.75})
            for (double dy : {0.25, 0.75}) pts.push_back({lo, up, cx + dx, cy + dy});
    };
    for (int u = 0; u < nb; ++u) {
        const Body& U = bodies[u];
        bool u_down = !U.virt || U.side != ContactSide::Above;
        if (!u_down) continue;
        if (U.z == 0 && s.world().baseplate) {
            for (int x = U.x0; x < U.x1; ++x)
                for (int y = U.y0; y < U.y1; ++y) corners(-1, u, x, y);
            continue;
        }
        for (int l = 0; l < nb; ++l) {
            const Body& L = bodies[l];
            if (L.z + 1 != U.z) continue;
            if (L.virt && L.side == ContactSide::Below) continue;
            for (int x = std::max(U.x0, L.x0); x < std::min(U.x1, L.x1); ++x)
                for (int y = std::max(U.y0, L.y0); y < std::min(U.y1, L.y1); ++y) corners(l, u, x, y);
        }
    }
    const int np = static_cast<int>(pts.size());

    std::vector<int> caps;
    for (int i = 0; i < nb; ++i)
        if (bodies[i].capped && bodies[i].w != 0.0) caps.push_back(i);
    const int nc = static_cast<int>(caps.size());

    // Columns: n_p, t_p | r+/r- per body row | m_i per body | slack per point | cap pair per capped body.
    const int c_r = 2 * np, c_m = c_r + 6 * nb, c_s = c_m + nb, c_c = c_s + np;
    DenseLp lp;
    lp.m = 3 * nb + np + nc;
    lp.n = c_c + 2 * nc;
    lp.a.assign(static_cast<std::size_t>(lp.m) * lp.n, 0.0);
    lp.b.assign(lp.m, 0.0);
    lp.c.assign(lp.n, 0.0);
    for (int i = 0; i < nb; ++i) lp.b[3 * i] = bodies[i].w;
    for (int p = 0; p < np; ++p) {
        const Pt& P = pts[p];
        auto apply = [&](int body, double sign) {
            const Body& B = bodies[body];
            double f[3] = {1.0, P.y - B.cy, P.x - B.cx};
            for (int k = 0; k < 3; ++k) {
                lp.at(3 * body + k, 2 * p) += sign * f[k];
                lp.at(3 * body + k, 2 * p + 1) -= sign * f[k];
            }
        };
        apply(P.up, 1.0);
        if (P.lo >= 0) apply(P.lo, -1.0);
        lp.c[2 * p + 1] = cfg.beta;
        // t_p - m_up + s_p = 0
        lp.at(3 * nb + p, 2 * p + 1) = 1.0;
        lp.at(3 * nb + p, c_m + P.up) = -1.0;
        lp.at(3 * nb + p, c_s + p) = 1.0;
    }
    std::vector<int> basis(lp.m);
    for (int r = 0; r < 3 * nb; ++r) {
        lp.at(r, c_r + 2 * r) = 1.0;
        lp.at(r, c_r + 2 * r + 1) = -1.0;
        lp.c[c_r + 2 * r] = lp.c[c_r + 2 * r + 1] = 1.0;
        basis[r] = lp.b[r] >= 0 ? c_r + 2 * r : c_r + 2 * r + 1;
    }
    for (int i = 0; i < nb; ++i) lp.c[c_m + i] = cfg.alpha;
    for (int p = 0; p < np; ++p) basis[3 * nb + p] = c_s + p;
    for (int k = 0; k < nc; ++k) {
        const int i = caps[k], row = 3 * nb + np + k;
        lp.at(3 * i, c_c + 2 * k) = bodies[i].w < 0 ? -1.0 : 1.0;
        lp.at(row, c_c + 2 * k) = 1.0;
        lp.at(row, c_c + 2 * k + 1) = 1.0;
        lp.b[row] = std::abs(bodies[i].w);
        basis[row] = c_c + 2 * k + 1;
    }

    OracleForces out;
    out.points = np;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    std::vector<char> fixed(lp.n, 0);
    std::function<void()> dfs = [&] {
        DenseResult r = solve_dense(lp, basis, fixed);
        ++out.lp_solves;
        if (!r.optimal || r.objective >= best - 1e-12) return;
        int split = -1;
        for (int p = 0; p < np; ++p) {
            if (std::min(r.x[2 * p], r.x[2 * p + 1]) > 1e-9) {
                split = p;
                break;
            }
        }
        if (split < 0) {
            best = r.objective;
            best_x = r.x;
            return;
        }
        for (int side = 0; side < 2; ++side) {
            fixed[2 * split + side] = 1;
            dfs();
            fixed[2 * split + side] = 0;
        }
    };
    dfs();
    out.objective = best;

    // Classification from the oracle's own forces.
    const double eps = cfg.residual_tolerance;
    std::vector<double> F(nb), tx(nb), ty(nb), dmax(nb, 0.0);
    for (int i = 0; i < nb; ++i) F[i] = -bodies[i].w;
    for (int p = 0; p < np; ++p) {
        double n = best_x[2 * p], t = best_x[2 * p + 1];
        double c = std::min(n, t);
        double f = (n - c) - (t - c);
        const Pt& P = pts[p];
        auto acc = [&](int body, double sign) {
            F[body] += sign * f;
            tx[body] += sign * (P.y - bodies[body].cy) * f;
            ty[body] += sign * (P.x - bodies[body].cx) * f;
        };
        acc(P.up, 1.0);
        if (P.lo >= 0) acc(P.lo, -1.0);
        dmax[P.up] = std::max(dmax[P.up], t - c);
    }
    for (int i : caps) {
        // Net contact force anywhere between zero and the weight balances.
        const double sum = F[i] + bodies[i].w;
        const double lo = std::min(bodies[i].w, 0.0), hi = std::max(bodies[i].w, 0.0);
        F[i] = sum < lo ? sum - lo : sum > hi ? sum - hi : 0.0;
    }
    out.stable = true;
    for (int i = 0; i < nb; ++i) {
        bool eq = std::abs(F[i]) <= eps && std::hypot(tx[i], ty[i]) <= eps;
        if (bodies[i].virt) {
            if (!eq) out.stable = false;
            continue;
        }
        double sc = (!eq || dmax[i] >= cfg.friction_capacity * (1 - 1e-9)) ? 0.0
                                                              : (cfg.friction_capacity - dmax[i]) / cfg.friction_capacity;
        out.scores.push_back(sc);
        if (!(sc > 0.0)) out.stable = false;
    }
    return out;
}

}  // namespace oracle
