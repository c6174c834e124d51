#include "brickplan/io.hpp"

#include <fstream>
#include <sstream>

namespace brickplan {

namespace {

std::string strip_comment(const std::string& line) {
    auto pos = line.find('#');
    std::string out = pos == std::string::npos ? line : line.substr(0, pos);
    auto first = out.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    auto last = out.find_last_not_of(" \t\r");
    return out.substr(first, last - first + 1);
}

std::string format_ldu(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

BrickStructure parse_structure_text(const std::string& text, const WorldConfig& world) {
    BrickStructure s(world);
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = strip_comment(raw);
        if (line.empty()) continue;
        Brick b;
        try {
            b = parse_brick_line(line);
        } catch (const ParseError& e) {
            throw ParseError(e.kind(), "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        try {
            s.push(b);
        } catch (const StructureError& e) {
            throw StructureError(e.kind(), "line " + std::to_string(line_no) + ": " + e.what(),
                                 e.blocking_index(), line_no);
        }
    }
    return s;
}

std::string structure_to_text(const BrickStructure& s) {
    std::string out;
    for (const auto& b : s.bricks()) {
        out += serialize_brick_line(b);
        out += '\n';
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("short write to " + path.string());
}

BrickStructure load_structure(const std::filesystem::path& path, const WorldConfig& world) {
    return parse_structure_text(read_file(path), world);
}

void save_structure(const BrickStructure& s, const std::filesystem::path& path) {
    write_file(path, structure_to_text(s));
}

nlohmann::json world_to_json(const WorldConfig& w) {
    return {{"dims", {w.dim_x, w.dim_y, w.dim_z}}, {"baseplate", w.baseplate}};
}

WorldConfig world_from_json(const nlohmann::json& j) {
    WorldConfig w;
    const auto& d = j.at("dims");
    w.dim_x = d.at(0).get<int>();
    w.dim_y = d.at(1).get<int>();
    w.dim_z = d.at(2).get<int>();
    w.baseplate = j.value("baseplate", true);
    return w;
}

nlohmann::json structure_to_json(const BrickStructure& s) {
    nlohmann::json bricks = nlohmann::json::array();
    for (const auto& b : s.bricks()) {
        bricks.push_back({{"line", serialize_brick_line(b)},
                          {"type", b.type.name()},
                          {"orientation", b.orientation == Orientation::AlongX ? "AlongX" : "AlongY"},
                          {"position", {b.x, b.y, b.z}}});
    }
    return {{"world", world_to_json(s.world())}, {"bricks", std::move(bricks)}};
}

BrickStructure structure_from_json(const nlohmann::json& j) {
    BrickStructure s(world_from_json(j.at("world")));
    for (const auto& b : j.at("bricks")) s.push(parse_brick_line(b.at("line").get<std::string>()));
    return s;
}

LDrawPartTable default_ldraw_parts() {
    return {
        {"1x1", "3005.dat"}, {"1x2", "3004.dat"}, {"1x4", "3010.dat"}, {"1x6", "3009.dat"},
        {"1x8", "3008.dat"}, {"2x2", "3003.dat"}, {"2x4", "3001.dat"}, {"2x6", "2456.dat"},
    };
}

int score_color(double score) {
    if (score <= 0.0) return 4;    // red
    if (score <= 0.25) return 25;  // orange
    if (score <= 0.5) return 14;   // yellow
    if (score <= 0.75) return 27;  // lime
    return 2;                      // green
}

std::string structure_to_ldraw(const BrickStructure& s, const LDrawPartTable& parts,
                               std::span<const int> colors) {
    std::ostringstream out;
    out << "0 brickplan export\n0 Name: structure.ldr\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Brick& b = s[i];
        auto it = parts.find(b.type.name());
        if (it == parts.end())
            throw ParseError(ParseError::Kind::UnknownBrickType,
                             "no LDraw part for brick type " + b.type.name());
        const int color = i < colors.size() ? colors[i] : kLDrawMainColor;
        const double x = kLDrawStudPitch * b.centroid_x();
        const double y = -static_cast<double>(kLDrawBrickHeight) * (b.z + 1);
        const double z = kLDrawStudPitch * b.centroid_y();
        // Parts have their long side on LDraw X; quarter-turn about -Y when it lies on Y.
        const bool long_on_x = b.x_extent() >= b.y_extent();
        const char* rot = long_on_x ? "1 0 0 0 1 0 0 0 1" : "0 0 1 0 1 0 -1 0 0";
        out << "1 " << color << ' ' << format_ldu(x) << ' ' << format_ldu(y) << ' '
            << format_ldu(z) << ' ' << rot << ' ' << it->second << '\n';
    }
    return out.str();
}

void export_ldraw(const BrickStructure& s, const std::filesystem::path& path,
                  const LDrawPartTable& parts, std::span<const int> colors) {
    write_file(path, structure_to_ldraw(s, parts, colors));
}

}  // namespace brickplan
