#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "brickplan/gate.hpp"
#include "brickplan/io.hpp"
#include "brickplan/scheduler.hpp"

namespace brickplan {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Everything a run needs, resolved before any stage starts.
struct RunConfig {
    std::uint64_t seed = 0;
    int jobs = 1;
    WorldConfig world;
    Inventory inventory = Inventory::default_inventory();
    SolverConfig solver;
    int max_rejections_per_brick = 16;
    int max_rollbacks = 8;
    RandomProposerConfig proposer;
    MaskConfig mask;
    DesignGeneratorConfig generator;
    SchedulerConfig scheduler;
    std::optional<Pose> rendezvous;
    ExecConfig exec;
    LDrawPartTable ldraw = default_ldraw_parts();

    GateConfig gate_config() const;
    MaskConfig mask_config() const;
    StationLayout layout() const;
    void validate() const;
};

// Flat "section.key" view of a config file.
using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;
using ConfigTable = std::map<std::string, ConfigValue>;

// Subset of TOML: [section] and [a.b] headers, key = value with booleans,
// integers, floats, basic strings and single-line numeric arrays.
ConfigTable parse_config_text(const std::string& text);
std::string config_to_text(const ConfigTable& table, bool with_docs = true);

ConfigTable config_table(const RunConfig& cfg);
// Unknown keys and wrong types are errors; missing keys keep their defaults.
RunConfig run_config_from_table(const ConfigTable& table);

// "section.key=value", value in config syntax (bare words are taken as strings).
void apply_override(ConfigTable& table, const std::string& assignment);
// PREFIX_SECTION_KEY for every known key, e.g. BRICKPLAN_SOLVER_ALPHA.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_env_overrides(ConfigTable& table, const std::string& prefix, const EnvLookup& lookup);
std::optional<std::string> getenv_lookup(const std::string& name);

// defaults <- file <- environment <- explicit overrides
RunConfig load_run_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides = {},
                          const EnvLookup& env = getenv_lookup, const std::string& prefix = "BRICKPLAN");

nlohmann::json run_config_to_json(const RunConfig& cfg);

}  // namespace brickplan
