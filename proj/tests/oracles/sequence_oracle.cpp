#include "oracles/sequence_oracle.hpp"

#include <algorithm>

namespace oracle {

using namespace brickplan;

namespace {

BrickStructure pick(const BrickStructure& d, unsigned mask, std::vector<int>& idx) {
    BrickStructure s(d.world());
    idx.clear();
    for (int i = 0; i < static_cast<int>(d.size()); ++i)
        if (mask >> i & 1u) {
            s.push(d[static_cast<std::size_t>(i)]);
            idx.push_back(i);
        }
    return s;
}

}  // namespace

std::optional<std::vector<int>> assembly_order_by_subsets(const BrickStructure& design, const MaskConfig& cfg,
                                                          const SolverConfig& solver) {
    const int n = static_cast<int>(design.size());
    if (n > 20) return std::nullopt;
    if (!stability(design, solver).stable) return std::nullopt;
    // clearable[mask] = brick removed first from mask, or -1; -2 unknown.
    std::vector<int> first(1u << n, -2);
    first[0] = n;
    std::vector<unsigned> order_masks;
    for (unsigned m = 1; m < (1u << n); ++m) order_masks.push_back(m);
    std::sort(order_masks.begin(), order_masks.end(),
              [](unsigned a, unsigned b) { return __builtin_popcount(a) < __builtin_popcount(b); });
    std::vector<int> idx;
    for (unsigned m : order_masks) {
        first[m] = -1;
        BrickStructure s = pick(design, m, idx);
        // Only stable remainders are reachable; the mask requires it.
        if (!stability(s, solver).stable) continue;
        for (std::size_t li = 0; li < idx.size(); ++li) {
            const unsigned rest = m & ~(1u << idx[li]);
            if (first[rest] == -1) continue;
            if (action_mask(s, li, cfg, solver).allowed) {
                first[m] = idx[li];
                break;
            }
        }
    }
    unsigned m = (1u << n) - 1;
    if (first[m] < 0) return std::nullopt;
    std::vector<int> removal;
    while (m) {
        removal.push_back(first[m]);
        m &= ~(1u << first[m]);
    }
    return std::vector<int>(removal.rbegin(), removal.rend());
}

bool order_passes_mask(const BrickStructure& design, const std::vector<int>& order, const MaskConfig& cfg,
                       const SolverConfig& solver) {
    BrickStructure s(design.world());
    for (int i : order) s.push(design[static_cast<std::size_t>(i)]);
    if (!stability(s, solver).stable) return false;
    for (std::size_t k = order.size(); k-- > 0;) {
        if (!action_mask(s, k, cfg, solver).allowed) return false;
        s.erase(k);
    }
    return true;
}

}  // namespace oracle
