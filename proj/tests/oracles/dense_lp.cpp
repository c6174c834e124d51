#include "oracles/dense_lp.hpp"

#include <cmath>

namespace oracle {

DenseResult solve_dense(const DenseLp& lp, const std::vector<int>& basis_in, const std::vector<char>& fixed_zero) {
    const int m = lp.m, n = lp.n, w = n + 1;
    std::vector<double> t(static_cast<std::size_t>(m + 1) * w, 0.0);
    auto T = [&](int i, int j) -> double& { return t[static_cast<std::size_t>(i) * w + j]; };
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) T(i, j) = lp.a[static_cast<std::size_t>(i) * n + j];
        T(i, n) = lp.b[i];
    }
    for (int j = 0; j < n; ++j) T(m, j) = lp.c[j];
    std::vector<int> basis = basis_in;

    auto pivot = [&](int r, int q) {
        double p = T(r, q);
        for (int j = 0; j < w; ++j) T(r, j) /= p;
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            double f = T(i, q);
            if (f == 0.0) continue;
            for (int j = 0; j < w; ++j) T(i, j) -= f * T(r, j);
        }
        basis[r] = q;
    };
    for (int i = 0; i < m; ++i) pivot(i, basis[i]);

    DenseResult res;
    for (int guard = 0; guard < 100000; ++guard) {
        int q = -1;
        for (int j = 0; j < n; ++j) {
            if (!fixed_zero.empty() && fixed_zero[j]) continue;
            if (T(m, j) < -1e-11) {
                q = j;
                break;
            }
        }
        if (q < 0) {
            res.optimal = true;
            res.x.assign(n, 0.0);
            for (int i = 0; i < m; ++i) res.x[basis[i]] = std::max(0.0, T(i, n));
            double obj = 0.0;
            for (int j = 0; j < n; ++j) obj += lp.c[j] * res.x[j];
            res.objective = obj;
            return res;
        }
        int r = -1;
        double best = 0.0;
        for (int i = 0; i < m; ++i) {
            if (T(i, q) <= 1e-11) continue;
            double ratio = std::max(0.0, T(i, n)) / T(i, q);
            if (r < 0 || ratio < best - 1e-13 || (ratio <= best + 1e-13 && basis[i] < basis[r])) {
                if (r < 0 || ratio < best) best = ratio;
                r = i;
            }
        }
        if (r < 0) return res;
        pivot(r, q);
    }
    return res;
}

}  // namespace oracle
