#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace brickplan {

// Integer grid cell. x, y in stud pitch units, z in brick heights.
struct Cell {
    int x = 0;
    int y = 0;
    int z = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Rectangular footprint, normalized so that length_studs >= width_studs.
struct BrickType {
    int width_studs = 1;
    int length_studs = 1;

    static BrickType make(int a, int b);

    int stud_count() const { return width_studs * length_studs; }
    std::string name() const;  // "2x4" (width first)

    friend auto operator<=>(const BrickType&, const BrickType&) = default;
};

// The eight footprints of the default inventory.
std::span<const BrickType> default_brick_types();
bool is_default_type(BrickType t);

// AlongX bricks are written "WxL": x extent = width, y extent = length.
// AlongY bricks are written "LxW": x extent = length, y extent = width.
// Square footprints are always AlongX.
enum class Orientation : std::uint8_t { AlongX, AlongY };

struct Brick {
    BrickType type;
    int x = 0;
    int y = 0;
    int z = 0;
    Orientation orientation = Orientation::AlongX;

    // Build from the extents written in the text format ("HxW").
    static Brick from_extents(int x_extent, int y_extent, int x, int y, int z);

    int x_extent() const {
        return orientation == Orientation::AlongX ? type.width_studs : type.length_studs;
    }
    int y_extent() const {
        return orientation == Orientation::AlongX ? type.length_studs : type.width_studs;
    }
    double centroid_x() const { return x + 0.5 * x_extent(); }
    double centroid_y() const { return y + 0.5 * y_extent(); }

    std::vector<Cell> cells() const;
    bool covers_column(int cx, int cy) const {
        return cx >= x && cx < x + x_extent() && cy >= y && cy < y + y_extent();
    }

    friend auto operator<=>(const Brick&, const Brick&) = default;
};

struct WorldConfig {
    int dim_x = 20;
    int dim_y = 20;
    int dim_z = 20;
    bool baseplate = true;

    bool contains(const Cell& c) const {
        return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < dim_x && c.y < dim_y && c.z < dim_z;
    }
    bool contains(const Brick& b) const;
    std::size_t cell_count() const {
        return static_cast<std::size_t>(dim_x) * dim_y * dim_z;
    }
    friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

// Per-type counts. A missing count means unbounded.
class Inventory {
public:
    struct Entry {
        BrickType type;
        std::optional<int> count;  // nullopt = unbounded
    };

    // The eight default types, each unbounded.
    static Inventory default_inventory();

    void set(BrickType t, std::optional<int> count);
    bool allows(BrickType t) const;
    // Remaining count after `used` bricks of this type; nullopt if unbounded.
    std::optional<int> remaining(BrickType t, int used) const;
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
};

class ParseError : public std::runtime_error {
public:
    enum class Kind { MalformedLine, UnknownBrickType };
    ParseError(Kind kind, std::string message, int line = 0)
        : std::runtime_error(std::move(message)), kind_(kind), line_(line) {}
    Kind kind() const { return kind_; }
    int line() const { return line_; }

private:
    Kind kind_;
    int line_;
};

// Parses "HxW (X,Y,Z)". With strict_types, footprints outside the default
// inventory throw UnknownBrickType; otherwise any positive footprint is accepted.
Brick parse_brick_line(std::string_view line, bool strict_types = false);
std::string serialize_brick_line(const Brick& b);

}  // namespace brickplan
