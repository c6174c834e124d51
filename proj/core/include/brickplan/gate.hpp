#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "brickplan/stability.hpp"

namespace brickplan {

enum class RejectReason : std::uint8_t { NotInInventory, InventoryExhausted, OutOfBounds, Collision };
const char* to_string(RejectReason r);

struct Validity {
    bool valid = true;
    RejectReason reason = RejectReason::Collision;
    int blocking = -1;  // colliding brick index

    explicit operator bool() const { return valid; }
};

struct GateConfig {
    Inventory inventory = Inventory::default_inventory();
    WorldConfig world;
    SolverConfig solver;
    int max_rejections_per_brick = 16;  // resamples allowed per slot
    int max_rollbacks = 8;
    int jobs = 1;

    void validate() const;
};

// Pull interface standing in for a generative model.
class ProposalSource {
public:
    virtual ~ProposalSource() = default;
    // Proposal for slot partial.size(), or nullopt at end of design.
    virtual std::optional<Brick> next(const BrickStructure& partial) = 0;
    // The last proposal was rejected; the next call resamples the same slot.
    virtual void reject() = 0;
    // The design was truncated to its first k bricks; regenerate from there.
    virtual void rollback(std::size_t k) = 0;
};

// Structure text with optional trailing annotations. A line marked
// `!collide` is preceded by an injected proposal that overlaps the last
// accepted brick; `!inventory` by one of a type outside the inventory.
// Replay is a single pass: after a rollback the stream continues where it was.
class ReplaySource : public ProposalSource {
public:
    struct Line {
        Brick brick;
        enum class Fault : std::uint8_t { None, Collide, Inventory } fault = Fault::None;
    };

    ReplaySource(std::vector<Line> lines, Inventory inventory);
    static ReplaySource from_text(const std::string& text, Inventory inventory);
    static ReplaySource from_file(const std::filesystem::path& path, Inventory inventory);

    std::optional<Brick> next(const BrickStructure& partial) override;
    void reject() override;
    void rollback(std::size_t) override {}

    const std::vector<Line>& lines() const { return lines_; }
    // Number of faults the stream will inject.
    int injected_faults() const;

private:
    std::vector<Line> lines_;
    Inventory inventory_;
    std::size_t cursor_ = 0;
    bool fault_pending_ = true;
    bool last_was_fault_ = false;
    bool outstanding_ = false;
};

struct RandomProposerConfig {
    int min_length = 4;
    int max_length = 16;
    double attach_probability = 0.85;  // place on or under an existing brick
    int region = 8;                    // ground placements stay in [0, region)^2
};

// Seeded proposer biased toward bricks stacked on existing ones. Each
// (rollback epoch, slot, attempt) draws from its own substream.
class RandomProposer : public ProposalSource {
public:
    RandomProposer(std::uint64_t seed, WorldConfig world, RandomProposerConfig cfg = {});

    std::optional<Brick> next(const BrickStructure& partial) override;
    void reject() override { ++attempt_; }
    void rollback(std::size_t) override {
        ++epoch_;
        attempt_ = 0;
    }

    int target_length() const { return target_; }

private:
    std::uint64_t seed_;
    WorldConfig world_;
    RandomProposerConfig cfg_;
    int target_ = 0;
    std::uint64_t epoch_ = 0;
    std::uint64_t attempt_ = 0;
    std::size_t last_slot_ = static_cast<std::size_t>(-1);
};

struct GateEvent {
    enum class Kind : std::uint8_t { Accepted, Rejected, Rollback, Finalized };
    Kind kind = Kind::Accepted;
    Brick brick;
    RejectReason reason = RejectReason::Collision;
    std::size_t from_len = 0;
    std::size_t to_len = 0;
    bool stable = false;

    friend bool operator==(const GateEvent&, const GateEvent&) = default;
};

struct GateTrace {
    std::vector<GateEvent> events;
    bool budget_exhausted = false;

    int count(GateEvent::Kind k) const;
    // Accepted events minus rollback truncations.
    BrickStructure fold(const WorldConfig& world) const;
};

struct GateResult {
    BrickStructure structure;
    GateTrace trace;
};

Validity check_brick_validity(const BrickStructure& partial, const Brick& b, const GateConfig& cfg);

// Greatest k such that the first k bricks are stable. Lengths are checked in
// batches of `jobs` from the top; the largest stable length in the first
// batch containing one wins.
std::size_t longest_stable_prefix(const BrickStructure& s, const SolverConfig& cfg, int jobs = 1,
                                  std::size_t start = static_cast<std::size_t>(-1));

GateResult run_gate(ProposalSource& src, const GateConfig& cfg);

nlohmann::json trace_to_json(const GateTrace& t);
GateTrace trace_from_json(const nlohmann::json& j);

}  // namespace brickplan
