#include "brickplan/structure.hpp"

#include <algorithm>
#include <numeric>

namespace brickplan {

BrickStructure::BrickStructure(WorldConfig world) : world_(world) {
    if (world_.dim_x < 1 || world_.dim_y < 1 || world_.dim_z < 1)
        throw std::invalid_argument("world dimensions must be >= 1");
    occupancy_.assign(world_.cell_count(), -1);
}

std::optional<int> BrickStructure::occupant(const Cell& c) const {
    if (!world_.contains(c)) return std::nullopt;
    auto v = occupancy_[slot(c)];
    if (v < 0) return std::nullopt;
    return v;
}

std::optional<int> BrickStructure::first_collision(const Brick& b) const {
    for (int i = 0; i < b.x_extent(); ++i) {
        for (int j = 0; j < b.y_extent(); ++j) {
            if (auto o = occupant({b.x + i, b.y + j, b.z})) return o;
        }
    }
    return std::nullopt;
}

void BrickStructure::validate(const Brick& b) const {
    if (!world_.contains(b)) {
        throw StructureError(StructureError::Kind::OutOfBounds,
                             "brick " + serialize_brick_line(b) + " is outside the world");
    }
    if (auto hit = first_collision(b)) {
        throw StructureError(StructureError::Kind::Collision,
                             "brick " + serialize_brick_line(b) + " collides with brick " +
                                 std::to_string(*hit),
                             *hit);
    }
}

void BrickStructure::push(const Brick& b) {
    validate(b);
    const auto index = static_cast<std::int32_t>(bricks_.size());
    bricks_.push_back(b);
    for (const auto& c : b.cells()) occupancy_[slot(c)] = index;
}

void BrickStructure::erase(std::size_t index) {
    if (index >= bricks_.size())
        throw StructureError(StructureError::Kind::BadIndex,
                             "brick index " + std::to_string(index) + " out of range");
    bricks_.erase(bricks_.begin() + static_cast<std::ptrdiff_t>(index));
    occupancy_ = recompute_occupancy();
}

BrickStructure BrickStructure::prefix(std::size_t n) const {
    BrickStructure out(world_);
    n = std::min(n, bricks_.size());
    out.bricks_.assign(bricks_.begin(), bricks_.begin() + static_cast<std::ptrdiff_t>(n));
    out.occupancy_ = out.recompute_occupancy();
    return out;
}

std::vector<std::int32_t> BrickStructure::recompute_occupancy() const {
    std::vector<std::int32_t> occ(world_.cell_count(), -1);
    for (std::size_t i = 0; i < bricks_.size(); ++i)
        for (const auto& c : bricks_[i].cells()) occ[slot(c)] = static_cast<std::int32_t>(i);
    return occ;
}

BrickStructure add_brick(const BrickStructure& s, const Brick& b) {
    BrickStructure out = s;
    out.push(b);
    return out;
}

BrickStructure remove_brick(const BrickStructure& s, std::size_t index) {
    BrickStructure out = s;
    out.erase(index);
    return out;
}

std::vector<ContactInterface> interfaces(const BrickStructure& s, std::size_t index) {
    if (index >= s.size())
        throw StructureError(StructureError::Kind::BadIndex,
                             "brick index " + std::to_string(index) + " out of range");
    const Brick& b = s[index];
    std::vector<ContactInterface> out;

    auto add_cell = [&](int neighbor, ContactInterface::Side side, Cell c) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ContactInterface& f) {
            return f.neighbor == neighbor && f.side == side;
        });
        if (it == out.end()) {
            out.push_back({neighbor, side, {}});
            it = out.end() - 1;
        }
        it->cells.push_back(c);
    };

    for (const auto& c : b.cells()) {
        if (c.z == 0) {
            if (s.world().baseplate) add_cell(kBaseplate, ContactInterface::Side::Below, c);
        } else if (auto below = s.occupant({c.x, c.y, c.z - 1})) {
            add_cell(*below, ContactInterface::Side::Below, c);
        }
        if (auto above = s.occupant({c.x, c.y, c.z + 1})) {
            add_cell(*above, ContactInterface::Side::Above, {c.x, c.y, c.z + 1});
        }
    }
    return out;
}

std::vector<std::vector<int>> connected_components(const BrickStructure& s) {
    const int n = static_cast<int>(s.size());
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<int>> comps;
    for (int start = 0; start < n; ++start) {
        if (label[static_cast<std::size_t>(start)] >= 0) continue;
        const int id = static_cast<int>(comps.size());
        comps.emplace_back();
        std::vector<int> stack{start};
        label[static_cast<std::size_t>(start)] = id;
        while (!stack.empty()) {
            int cur = stack.back();
            stack.pop_back();
            comps.back().push_back(cur);
            for (const auto& f : interfaces(s, static_cast<std::size_t>(cur))) {
                if (f.neighbor == kBaseplate) continue;
                auto& l = label[static_cast<std::size_t>(f.neighbor)];
                if (l < 0) {
                    l = id;
                    stack.push_back(f.neighbor);
                }
            }
        }
        std::sort(comps.back().begin(), comps.back().end());
    }
    return comps;
}

bool same_brick_set(const BrickStructure& a, const BrickStructure& b) {
    if (a.size() != b.size()) return false;
    auto sa = a.bricks();
    auto sb = b.bricks();
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return sa == sb;
}

}  // namespace brickplan
