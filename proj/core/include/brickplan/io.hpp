#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "brickplan/structure.hpp"

namespace brickplan {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Text format: one "HxW (X,Y,Z)" per line, '#' starts a comment, blank lines ignored.
// Parse and structure errors carry the 1-based line number.
BrickStructure parse_structure_text(const std::string& text, const WorldConfig& world);
std::string structure_to_text(const BrickStructure& s);

BrickStructure load_structure(const std::filesystem::path& path, const WorldConfig& world);
void save_structure(const BrickStructure& s, const std::filesystem::path& path);

nlohmann::json structure_to_json(const BrickStructure& s);
BrickStructure structure_from_json(const nlohmann::json& j);
nlohmann::json world_to_json(const WorldConfig& w);
WorldConfig world_from_json(const nlohmann::json& j);

// BrickType name ("2x4") -> LDraw part file ("3001.dat").
using LDrawPartTable = std::map<std::string, std::string>;
LDrawPartTable default_ldraw_parts();

inline constexpr int kLDrawStudPitch = 20;
inline constexpr int kLDrawBrickHeight = 24;
inline constexpr int kLDrawMainColor = 16;

// LDraw text. colors, when given, holds one LDraw color code per brick.
std::string structure_to_ldraw(const BrickStructure& s, const LDrawPartTable& parts,
                               std::span<const int> colors = {});
void export_ldraw(const BrickStructure& s, const std::filesystem::path& path,
                  const LDrawPartTable& parts, std::span<const int> colors = {});

// Score bucket -> LDraw color: 0 red, then orange, yellow, lime, green.
int score_color(double score);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace brickplan
