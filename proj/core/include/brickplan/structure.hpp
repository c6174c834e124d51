#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "brickplan/brick.hpp"

namespace brickplan {

inline constexpr int kBaseplate = -1;

class StructureError : public std::runtime_error {
public:
    enum class Kind { OutOfBounds, Collision, BadIndex };
    StructureError(Kind kind, std::string message, int blocking = -1, int line = 0)
        : std::runtime_error(std::move(message)), kind_(kind), blocking_(blocking), line_(line) {}

    Kind kind() const { return kind_; }
    // Index of the brick already occupying the cell, for Collision.
    int blocking_index() const { return blocking_; }
    // 1-based file line when raised while loading, else 0.
    int line() const { return line_; }

private:
    Kind kind_;
    int blocking_;
    int line_;
};

// Vertical contact between a brick and one neighbour (or the baseplate).
struct ContactInterface {
    enum class Side : std::uint8_t { Below, Above };
    int neighbor = kBaseplate;  // brick index or kBaseplate
    Side side = Side::Below;    // where the neighbour sits relative to the brick
    std::vector<Cell> cells;    // overlap cells, at the z of the upper brick
};

// Ordered bricks plus a dense occupancy index over the world grid.
// Order is the generation order and is preserved by every operation.
class BrickStructure {
public:
    BrickStructure() : BrickStructure(WorldConfig{}) {}
    explicit BrickStructure(WorldConfig world);

    const WorldConfig& world() const { return world_; }
    const std::vector<Brick>& bricks() const { return bricks_; }
    std::size_t size() const { return bricks_.size(); }
    bool empty() const { return bricks_.empty(); }
    const Brick& operator[](std::size_t i) const { return bricks_[i]; }

    // Brick index occupying the cell, or nullopt (also for out-of-world cells).
    std::optional<int> occupant(const Cell& c) const;
    bool occupied(const Cell& c) const { return occupant(c).has_value(); }

    // First colliding brick index for b, or nullopt. Throws nothing; out-of-world
    // cells are ignored here.
    std::optional<int> first_collision(const Brick& b) const;

    // In-place mutation (requires exclusive access).
    void push(const Brick& b);
    void erase(std::size_t index);
    // First n bricks, same world.
    BrickStructure prefix(std::size_t n) const;

    // Occupancy recomputed from the brick list; used to check the index.
    std::vector<std::int32_t> recompute_occupancy() const;
    const std::vector<std::int32_t>& occupancy() const { return occupancy_; }

    friend bool operator==(const BrickStructure& a, const BrickStructure& b) {
        return a.world_ == b.world_ && a.bricks_ == b.bricks_;
    }

private:
    std::size_t slot(const Cell& c) const {
        return (static_cast<std::size_t>(c.z) * world_.dim_y + c.y) * world_.dim_x + c.x;
    }
    void validate(const Brick& b) const;

    WorldConfig world_;
    std::vector<Brick> bricks_;
    std::vector<std::int32_t> occupancy_;
};

BrickStructure add_brick(const BrickStructure& s, const Brick& b);
BrickStructure remove_brick(const BrickStructure& s, std::size_t index);

// One interface per neighbour touching brick i from directly above or below.
std::vector<ContactInterface> interfaces(const BrickStructure& s, std::size_t index);

// Partition of brick indices under the "shares a vertical interface" relation.
// Components are sorted by smallest member; members ascending.
std::vector<std::vector<int>> connected_components(const BrickStructure& s);

// Same bricks regardless of order.
bool same_brick_set(const BrickStructure& a, const BrickStructure& b);

}  // namespace brickplan
