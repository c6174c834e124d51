#include "brickplan/gate.hpp"

#include <algorithm>
#include <sstream>

#include "brickplan/io.hpp"
#include "brickplan/parallel.hpp"
#include "brickplan/rng.hpp"

namespace brickplan {

namespace {

constexpr std::uint64_t kTargetStream = 0x7461726765740000ULL;

int used_of_type(const BrickStructure& s, BrickType t) {
    return static_cast<int>(std::count_if(s.bricks().begin(), s.bricks().end(),
                                          [&](const Brick& b) { return b.type == t; }));
}

nlohmann::json brick_json(const Brick& b) {
    return {{"x_extent", b.x_extent()}, {"y_extent", b.y_extent()}, {"x", b.x}, {"y", b.y}, {"z", b.z}};
}

Brick brick_from(const nlohmann::json& j) {
    return Brick::from_extents(j.at("x_extent").get<int>(), j.at("y_extent").get<int>(), j.at("x").get<int>(),
                               j.at("y").get<int>(), j.at("z").get<int>());
}

RejectReason reason_from(const std::string& s) {
    for (auto r : {RejectReason::NotInInventory, RejectReason::InventoryExhausted, RejectReason::OutOfBounds,
                   RejectReason::Collision})
        if (s == to_string(r)) return r;
    throw std::invalid_argument("unknown reject reason " + s);
}

const char* kind_name(GateEvent::Kind k) {
    switch (k) {
        case GateEvent::Kind::Accepted: return "Accepted";
        case GateEvent::Kind::Rejected: return "Rejected";
        case GateEvent::Kind::Rollback: return "Rollback";
        case GateEvent::Kind::Finalized: return "Finalized";
    }
    return "?";
}

}  // namespace

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::NotInInventory: return "NotInInventory";
        case RejectReason::InventoryExhausted: return "InventoryExhausted";
        case RejectReason::OutOfBounds: return "OutOfBounds";
        case RejectReason::Collision: return "Collision";
    }
    return "?";
}

void GateConfig::validate() const {
    if (max_rejections_per_brick < 1 || max_rollbacks < 1) throw std::invalid_argument("gate budgets must be >= 1");
    solver.validate();
}

Validity check_brick_validity(const BrickStructure& partial, const Brick& b, const GateConfig& cfg) {
    Validity v;
    if (!cfg.inventory.allows(b.type)) {
        v.valid = false;
        v.reason = RejectReason::NotInInventory;
        return v;
    }
    if (auto left = cfg.inventory.remaining(b.type, used_of_type(partial, b.type)); left && *left <= 0) {
        v.valid = false;
        v.reason = RejectReason::InventoryExhausted;
        return v;
    }
    if (!cfg.world.contains(b)) {
        v.valid = false;
        v.reason = RejectReason::OutOfBounds;
        return v;
    }
    if (auto hit = partial.first_collision(b)) {
        v.valid = false;
        v.reason = RejectReason::Collision;
        v.blocking = *hit;
    }
    return v;
}

// ---- replay ---------------------------------------------------------------

ReplaySource::ReplaySource(std::vector<Line> lines, Inventory inventory)
    : lines_(std::move(lines)), inventory_(std::move(inventory)) {}

ReplaySource ReplaySource::from_text(const std::string& text, Inventory inventory) {
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        Line line;
        if (auto bang = raw.find('!'); bang != std::string::npos) {
            std::istringstream notes(raw.substr(bang));
            std::string tag;
            while (notes >> tag) {
                if (tag == "!collide") line.fault = Line::Fault::Collide;
                else if (tag == "!inventory") line.fault = Line::Fault::Inventory;
                else
                    throw ParseError(ParseError::Kind::MalformedLine,
                                     "line " + std::to_string(line_no) + ": unknown annotation " + tag, line_no);
            }
            raw.resize(bang);
        }
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            line.brick = parse_brick_line(raw);
        } catch (const ParseError& e) {
            throw ParseError(e.kind(), "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        lines.push_back(line);
    }
    return ReplaySource(std::move(lines), std::move(inventory));
}

ReplaySource ReplaySource::from_file(const std::filesystem::path& path, Inventory inventory) {
    return from_text(read_file(path), std::move(inventory));
}

int ReplaySource::injected_faults() const {
    return static_cast<int>(
        std::count_if(lines_.begin(), lines_.end(), [](const Line& l) { return l.fault != Line::Fault::None; }));
}

std::optional<Brick> ReplaySource::next(const BrickStructure& partial) {
    if (outstanding_) {
        outstanding_ = false;
        if (last_was_fault_) {
            fault_pending_ = false;
        } else {
            ++cursor_;
            fault_pending_ = true;
        }
    }
    if (cursor_ >= lines_.size()) return std::nullopt;
    const Line& line = lines_[cursor_];
    outstanding_ = true;
    last_was_fault_ = false;
    if (fault_pending_ && line.fault == Line::Fault::Collide && !partial.empty()) {
        const Brick& last = partial[partial.size() - 1];
        last_was_fault_ = true;
        return Brick::from_extents(line.brick.x_extent(), line.brick.y_extent(), last.x, last.y, last.z);
    }
    if (fault_pending_ && line.fault == Line::Fault::Inventory) {
        for (auto [a, b] : {std::pair{2, 8}, {3, 3}, {1, 3}, {2, 3}, {3, 4}, {1, 10}}) {
            BrickType t = BrickType::make(a, b);
            if (inventory_.allows(t)) continue;
            last_was_fault_ = true;
            return Brick::from_extents(a, b, line.brick.x, line.brick.y, line.brick.z);
        }
    }
    return line.brick;
}

void ReplaySource::reject() {
    if (!outstanding_) return;
    outstanding_ = false;
    if (last_was_fault_) {
        fault_pending_ = false;
    } else {
        ++cursor_;
        fault_pending_ = true;
    }
}

// ---- random proposer ------------------------------------------------------

RandomProposer::RandomProposer(std::uint64_t seed, WorldConfig world, RandomProposerConfig cfg)
    : seed_(seed), world_(world), cfg_(cfg) {
    auto rng = substream({seed_, kTargetStream});
    target_ = uniform_int(rng, std::min(cfg_.min_length, cfg_.max_length), cfg_.max_length);
}

std::optional<Brick> RandomProposer::next(const BrickStructure& partial) {
    const std::size_t slot = partial.size();
    if (slot != last_slot_) {
        last_slot_ = slot;
        attempt_ = 0;
    }
    if (static_cast<int>(slot) >= target_) return std::nullopt;
    auto rng = substream({seed_, epoch_, slot, attempt_});
    auto types = default_brick_types();
    BrickType t = types[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(types.size()) - 1))];
    const bool along_y = uniform_int(rng, 0, 1) == 1 && t.width_studs != t.length_studs;
    const int xe = along_y ? t.length_studs : t.width_studs;
    const int ye = along_y ? t.width_studs : t.length_studs;

    if (!partial.empty() && uniform_real(rng) < cfg_.attach_probability) {
        const Brick& a = partial[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(slot) - 1))];
        int z = a.z + 1;
        if (a.z > 0 && uniform_real(rng) < 0.2) z = a.z - 1;
        int x = uniform_int(rng, a.x - xe + 1, a.x + a.x_extent() - 1);
        int y = uniform_int(rng, a.y - ye + 1, a.y + a.y_extent() - 1);
        return Brick::from_extents(xe, ye, x, y, z);
    }
    const int rx = std::min(cfg_.region, world_.dim_x);
    const int ry = std::min(cfg_.region, world_.dim_y);
    int x = uniform_int(rng, 0, std::max(0, rx - xe));
    int y = uniform_int(rng, 0, std::max(0, ry - ye));
    return Brick::from_extents(xe, ye, x, y, 0);
}

// ---- gate -----------------------------------------------------------------

int GateTrace::count(GateEvent::Kind k) const {
    return static_cast<int>(std::count_if(events.begin(), events.end(), [&](const GateEvent& e) { return e.kind == k; }));
}

BrickStructure GateTrace::fold(const WorldConfig& world) const {
    BrickStructure s(world);
    for (const auto& e : events) {
        if (e.kind == GateEvent::Kind::Accepted) s.push(e.brick);
        if (e.kind == GateEvent::Kind::Rollback) s = s.prefix(e.to_len);
    }
    return s;
}

std::size_t longest_stable_prefix(const BrickStructure& s, const SolverConfig& cfg, int jobs, std::size_t start) {
    std::size_t k = std::min(start, s.size());
    const std::size_t batch = static_cast<std::size_t>(std::max(1, jobs));
    while (k > 0) {
        const std::size_t n = std::min(batch, k);
        std::vector<char> ok(n, 0);
        parallel_for(n, jobs, [&](std::size_t i) { ok[i] = stability(s.prefix(k - i), cfg).stable; });
        for (std::size_t i = 0; i < n; ++i)
            if (ok[i]) return k - i;
        k -= n;
    }
    return 0;
}

GateResult run_gate(ProposalSource& src, const GateConfig& cfg) {
    cfg.validate();
    GateResult out{BrickStructure(cfg.world), {}};
    auto& partial = out.structure;
    auto& trace = out.trace;
    int rollbacks = 0;

    auto finalize = [&](bool exhausted) {
        trace.budget_exhausted = exhausted;
        GateEvent f;
        f.kind = GateEvent::Kind::Finalized;
        f.stable = stability(partial, cfg.solver).stable;
        trace.events.push_back(f);
    };
    auto truncate = [&](std::size_t to) {
        GateEvent rb;
        rb.kind = GateEvent::Kind::Rollback;
        rb.from_len = partial.size();
        rb.to_len = to;
        trace.events.push_back(rb);
        partial = partial.prefix(to);
    };

    for (;;) {
        int rejections = 0;
        std::optional<Brick> prop;
        for (;;) {
            prop = src.next(partial);
            if (!prop) break;
            Validity v = check_brick_validity(partial, *prop, cfg);
            GateEvent e;
            e.brick = *prop;
            if (v) {
                e.kind = GateEvent::Kind::Accepted;
                trace.events.push_back(e);
                partial.push(*prop);
                break;
            }
            e.kind = GateEvent::Kind::Rejected;
            e.reason = v.reason;
            trace.events.push_back(e);
            if (++rejections > cfg.max_rejections_per_brick) {
                std::size_t k = longest_stable_prefix(partial, cfg.solver, cfg.jobs);
                if (k < partial.size()) truncate(k);
                finalize(true);
                return out;
            }
            src.reject();
        }
        if (prop) continue;

        // End of design.
        if (stability(partial, cfg.solver).stable) {
            finalize(false);
            return out;
        }
        std::size_t k = partial.empty() ? 0 : longest_stable_prefix(partial, cfg.solver, cfg.jobs, partial.size() - 1);
        truncate(k);
        if (rollbacks >= cfg.max_rollbacks) {
            finalize(true);
            return out;
        }
        ++rollbacks;
        src.rollback(k);
    }
}

nlohmann::json trace_to_json(const GateTrace& t) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : t.events) {
        nlohmann::json j{{"event", kind_name(e.kind)}};
        switch (e.kind) {
            case GateEvent::Kind::Accepted:
                j["brick"] = brick_json(e.brick);
                j["line"] = serialize_brick_line(e.brick);
                break;
            case GateEvent::Kind::Rejected:
                j["brick"] = brick_json(e.brick);
                j["reason"] = to_string(e.reason);
                break;
            case GateEvent::Kind::Rollback:
                j["from_len"] = e.from_len;
                j["to_len"] = e.to_len;
                break;
            case GateEvent::Kind::Finalized:
                j["stable"] = e.stable;
                break;
        }
        events.push_back(std::move(j));
    }
    return {{"events", std::move(events)}, {"budget_exhausted", t.budget_exhausted}};
}

GateTrace trace_from_json(const nlohmann::json& j) {
    GateTrace t;
    t.budget_exhausted = j.value("budget_exhausted", false);
    for (const auto& e : j.at("events")) {
        GateEvent ev;
        const auto k = e.at("event").get<std::string>();
        if (k == "Accepted") {
            ev.kind = GateEvent::Kind::Accepted;
            ev.brick = brick_from(e.at("brick"));
        } else if (k == "Rejected") {
            ev.kind = GateEvent::Kind::Rejected;
            ev.brick = brick_from(e.at("brick"));
            ev.reason = reason_from(e.at("reason").get<std::string>());
        } else if (k == "Rollback") {
            ev.kind = GateEvent::Kind::Rollback;
            ev.from_len = e.at("from_len").get<std::size_t>();
            ev.to_len = e.at("to_len").get<std::size_t>();
        } else if (k == "Finalized") {
            ev.kind = GateEvent::Kind::Finalized;
            ev.stable = e.at("stable").get<bool>();
        } else {
            throw std::invalid_argument("unknown trace event " + k);
        }
        t.events.push_back(ev);
    }
    return t;
}

}  // namespace brickplan
