#include "brickplan/brick.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace brickplan {

namespace {

constexpr std::array<BrickType, 8> kDefaultTypes{{
    {1, 1}, {1, 2}, {1, 4}, {1, 6}, {1, 8}, {2, 2}, {2, 4}, {2, 6},
}};

class Scanner {
public:
    explicit Scanner(std::string_view s) : s_(s) {}

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    // Accepts 'x', 'X' and the UTF-8 multiplication sign.
    bool eat_times() {
        skip_ws();
        if (pos_ < s_.size() && (s_[pos_] == 'x' || s_[pos_] == 'X')) {
            ++pos_;
            return true;
        }
        constexpr std::string_view kTimes = "\xC3\x97";
        if (s_.substr(pos_, kTimes.size()) == kTimes) {
            pos_ += kTimes.size();
            return true;
        }
        return false;
    }
    std::optional<int> integer() {
        skip_ws();
        int value = 0;
        auto begin = s_.data() + pos_;
        auto end = s_.data() + s_.size();
        if (begin == end || !std::isdigit(static_cast<unsigned char>(*begin))) return std::nullopt;
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{}) return std::nullopt;
        pos_ += static_cast<std::size_t>(ptr - begin);
        return value;
    }
    bool at_end() {
        skip_ws();
        return pos_ == s_.size();
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

BrickType BrickType::make(int a, int b) {
    return BrickType{std::min(a, b), std::max(a, b)};
}

std::string BrickType::name() const {
    return std::to_string(width_studs) + "x" + std::to_string(length_studs);
}

std::span<const BrickType> default_brick_types() { return kDefaultTypes; }

bool is_default_type(BrickType t) {
    return std::find(kDefaultTypes.begin(), kDefaultTypes.end(), t) != kDefaultTypes.end();
}

Brick Brick::from_extents(int x_extent, int y_extent, int x, int y, int z) {
    Brick b;
    b.type = BrickType::make(x_extent, y_extent);
    b.orientation = x_extent <= y_extent ? Orientation::AlongX : Orientation::AlongY;
    b.x = x;
    b.y = y;
    b.z = z;
    return b;
}

std::vector<Cell> Brick::cells() const {
    std::vector<Cell> out;
    out.reserve(static_cast<std::size_t>(type.stud_count()));
    for (int i = 0; i < x_extent(); ++i)
        for (int j = 0; j < y_extent(); ++j) out.push_back({x + i, y + j, z});
    return out;
}

bool WorldConfig::contains(const Brick& b) const {
    return contains(Cell{b.x, b.y, b.z}) &&
           contains(Cell{b.x + b.x_extent() - 1, b.y + b.y_extent() - 1, b.z});
}

Inventory Inventory::default_inventory() {
    Inventory inv;
    for (auto t : kDefaultTypes) inv.set(t, std::nullopt);
    return inv;
}

void Inventory::set(BrickType t, std::optional<int> count) {
    if (count && *count < 0) throw std::invalid_argument("inventory count must be non-negative");
    for (auto& e : entries_) {
        if (e.type == t) {
            e.count = count;
            return;
        }
    }
    entries_.push_back({t, count});
}

bool Inventory::allows(BrickType t) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.type == t; });
}

std::optional<int> Inventory::remaining(BrickType t, int used) const {
    for (const auto& e : entries_) {
        if (e.type != t) continue;
        if (!e.count) return std::nullopt;
        return std::max(0, *e.count - used);
    }
    return 0;
}

Brick parse_brick_line(std::string_view line, bool strict_types) {
    Scanner sc(line);
    auto fail = [&] {
        return ParseError(ParseError::Kind::MalformedLine,
                          "malformed brick line: '" + std::string(line) + "'");
    };
    auto h = sc.integer();
    if (!h || !sc.eat_times()) throw fail();
    auto w = sc.integer();
    if (!w || !sc.eat('(')) throw fail();
    auto x = sc.integer();
    if (!x || !sc.eat(',')) throw fail();
    auto y = sc.integer();
    if (!y || !sc.eat(',')) throw fail();
    auto z = sc.integer();
    if (!z || !sc.eat(')') || !sc.at_end()) throw fail();
    if (*h <= 0 || *w <= 0) throw fail();

    Brick b = Brick::from_extents(*h, *w, *x, *y, *z);
    if (strict_types && !is_default_type(b.type)) {
        throw ParseError(ParseError::Kind::UnknownBrickType,
                         "unknown brick type " + b.type.name());
    }
    return b;
}

std::string serialize_brick_line(const Brick& b) {
    return std::to_string(b.x_extent()) + "x" + std::to_string(b.y_extent()) + " (" +
           std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.z) + ")";
}

}  // namespace brickplan
