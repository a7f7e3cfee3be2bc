#include "mvba/broadcast.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <stdexcept>

#include "mvba/common.hpp"

namespace mvba {
namespace {

using Path = std::vector<NodeId>;
using ValueTree = std::map<Path, BitVec>;

// One composed message together with the recipient-side slots it fills.
// Slot mapping is positional: slot i covers bits [i*value_bits, (i+1)*value_bits).
struct Delivery {
    std::size_t instance_index = 0;
    NodeId sender = -1;
    NodeId recipient = -1;
    std::vector<Path> slots;
    BitVec bits;
};

BitVec normalized(BitVec v, std::size_t value_bits) {
    v.resize(value_bits);
    return v;
}

bool path_contains(const Path& path, NodeId node) {
    return std::find(path.begin(), path.end(), node) != path.end();
}

// Level r paths are (source, i1..i_{r-1}) with distinct non-source relays,
// enumerated in level order with ascending extensions.
std::vector<std::vector<Path>> enumerate_levels(const std::vector<NodeId>& participants,
                                                NodeId source, int depth) {
    std::vector<std::vector<Path>> levels(static_cast<std::size_t>(depth) + 2);
    levels[1] = {Path{source}};
    for (int r = 2; r <= depth + 1; ++r) {
        for (const Path& base : levels[r - 1]) {
            for (NodeId q : participants) {
                if (q == source || path_contains(base, q)) continue;
                Path extended = base;
                extended.push_back(q);
                levels[r].push_back(std::move(extended));
            }
        }
    }
    return levels;
}

BitVec resolve(const ValueTree& tree, const std::vector<NodeId>& participants,
               NodeId source, int depth, std::size_t value_bits, const Path& path) {
    if (static_cast<int>(path.size()) == depth + 1) {
        auto it = tree.find(path);
        return it != tree.end() ? it->second : BitVec(value_bits);
    }
    std::vector<BitVec> child_values;
    for (NodeId q : participants) {
        if (q == source || path_contains(path, q)) continue;
        Path extended = path;
        extended.push_back(q);
        child_values.push_back(resolve(tree, participants, source, depth, value_bits, extended));
    }
    if (child_values.empty()) {
        auto it = tree.find(path);
        return it != tree.end() ? it->second : BitVec(value_bits);
    }
    std::map<BitVec, std::size_t> tally;
    for (const BitVec& v : child_values) ++tally[v];
    for (const auto& [value, count] : tally) {
        if (count * 2 > child_values.size()) return value;
    }
    return BitVec(value_bits);  // no strict majority: all-zero default
}

}  // namespace

BroadcastOutcome run_broadcast_phase(SyncNet& net, StepTag tag,
                                     const std::vector<NodeId>& participants, int depth,
                                     const std::vector<BroadcastInstance>& instances,
                                     std::size_t value_bits, Adversary& adversary,
                                     AdvContext ctx) {
    if (depth < 0) throw ConfigError("broadcast depth must be non-negative");
    if (value_bits == 0) throw ConfigError("broadcast value width must be positive");
    std::vector<NodeId> parts = participants;
    std::sort(parts.begin(), parts.end());
    if (std::adjacent_find(parts.begin(), parts.end()) != parts.end()) {
        throw ConfigError("broadcast participants must be distinct");
    }
    if (parts.size() <= static_cast<std::size_t>(3 * depth)) {
        throw ConfigError("broadcast needs more than 3*depth participants, got " +
                          std::to_string(parts.size()) + " for depth " + std::to_string(depth));
    }

    std::vector<std::vector<std::vector<Path>>> levels;
    levels.reserve(instances.size());
    for (const BroadcastInstance& inst : instances) {
        if (!std::binary_search(parts.begin(), parts.end(), inst.source)) {
            throw ConfigError("broadcast source is not a participant");
        }
        levels.push_back(enumerate_levels(parts, inst.source, depth));
    }

    // val[p] holds the path-indexed values participant p has stored so far.
    std::vector<std::map<NodeId, ValueTree>> val(instances.size());
    for (std::size_t ii = 0; ii < instances.size(); ++ii) {
        val[ii][instances[ii].source][Path{instances[ii].source}] =
            normalized(instances[ii].input, value_bits);
    }

    auto deliver = [&](std::vector<Delivery> honest, std::vector<Delivery> controlled) {
        std::vector<Delivery> all = std::move(honest);
        for (Delivery& d : controlled) all.push_back(std::move(d));
        std::vector<RoundMessage> msgs;
        msgs.reserve(all.size());
        for (const Delivery& d : all) msgs.push_back({d.sender, d.recipient, tag, d.bits});
        net.step(tag, msgs);
        for (const Delivery& d : all) {
            for (std::size_t s = 0; s < d.slots.size(); ++s) {
                val[d.instance_index][d.recipient][d.slots[s]] =
                    d.bits.slice(s * value_bits, value_bits);
            }
        }
    };
    auto rush_messages = [&](const std::vector<Delivery>& honest) {
        std::vector<RoundMessage> rush;
        for (const Delivery& d : honest) {
            if (adversary.controls(d.recipient)) rush.push_back({d.sender, d.recipient, tag, d.bits});
        }
        return rush;
    };

    BroadcastOutcome out;

    // Round 1: each commander sends its value to every other participant.
    {
        std::vector<Delivery> honest;
        for (std::size_t ii = 0; ii < instances.size(); ++ii) {
            NodeId c = instances[ii].source;
            if (adversary.controls(c)) continue;
            const BitVec& input = val[ii][c][Path{c}];
            for (NodeId q : parts) {
                if (q != c) honest.push_back({ii, c, q, {Path{c}}, input});
            }
        }
        std::vector<RoundMessage> rush = rush_messages(honest);
        ctx.rush_view = &rush;
        std::vector<Delivery> controlled;
        for (std::size_t ii = 0; ii < instances.size(); ++ii) {
            NodeId c = instances[ii].source;
            if (!adversary.controls(c)) continue;
            const BitVec& input = val[ii][c][Path{c}];
            OmInstanceInfo info{instances[ii].instance_id, c, 1};
            for (NodeId q : parts) {
                if (q == c) continue;
                BitVec v = normalized(adversary.om_value(ctx, info, c, q, Path{c}, input),
                                      value_bits);
                if (v != input) out.adversary_deviated = true;
                controlled.push_back({ii, c, q, {Path{c}}, std::move(v)});
            }
        }
        deliver(std::move(honest), std::move(controlled));
    }

    for (int r = 2; r <= depth + 1; ++r) {
        // Honest bookkeeping first: every relay extends its own stored paths
        // with itself before anything is sent this round.
        std::vector<std::map<NodeId, std::vector<Path>>> round_slots(instances.size());
        for (std::size_t ii = 0; ii < instances.size(); ++ii) {
            NodeId c = instances[ii].source;
            for (NodeId p : parts) {
                if (p == c) continue;
                std::vector<Path>& slots = round_slots[ii][p];
                for (const Path& sigma : levels[ii][r - 1]) {
                    if (!path_contains(sigma, p)) slots.push_back(sigma);
                }
                ValueTree& tree = val[ii][p];
                for (const Path& sigma : slots) {
                    Path extended = sigma;
                    extended.push_back(p);
                    auto it = tree.find(sigma);
                    tree[extended] = it != tree.end() ? it->second : BitVec(value_bits);
                }
            }
        }
        auto compose = [&](std::size_t ii, NodeId p, bool use_hook) {
            std::vector<Delivery> composed;
            NodeId c = instances[ii].source;
            const std::vector<Path>& slots = round_slots[ii][p];
            if (slots.empty()) return composed;
            std::vector<Path> sent_slots;
            for (const Path& sigma : slots) {
                Path extended = sigma;
                extended.push_back(p);
                sent_slots.push_back(std::move(extended));
            }
            OmInstanceInfo info{instances[ii].instance_id, c, r};
            for (NodeId q : parts) {
                if (q == c || q == p) continue;
                BitVec payload;
                for (std::size_t s = 0; s < slots.size(); ++s) {
                    auto it = val[ii][p].find(slots[s]);
                    BitVec honest_value =
                        it != val[ii][p].end() ? it->second : BitVec(value_bits);
                    if (use_hook) {
                        BitVec sent = normalized(
                            adversary.om_value(ctx, info, p, q, sent_slots[s], honest_value),
                            value_bits);
                        if (sent != honest_value) out.adversary_deviated = true;
                        honest_value = std::move(sent);
                    }
                    payload.append(honest_value);
                }
                composed.push_back({ii, p, q, sent_slots, std::move(payload)});
            }
            return composed;
        };
        std::vector<Delivery> honest;
        for (std::size_t ii = 0; ii < instances.size(); ++ii) {
            for (NodeId p : parts) {
                if (p == instances[ii].source || adversary.controls(p)) continue;
                for (Delivery& d : compose(ii, p, false)) honest.push_back(std::move(d));
            }
        }
        std::vector<RoundMessage> rush = rush_messages(honest);
        ctx.rush_view = &rush;
        std::vector<Delivery> controlled;
        for (std::size_t ii = 0; ii < instances.size(); ++ii) {
            for (NodeId p : parts) {
                if (p == instances[ii].source || !adversary.controls(p)) continue;
                for (Delivery& d : compose(ii, p, true)) controlled.push_back(std::move(d));
            }
        }
        deliver(std::move(honest), std::move(controlled));
    }

    for (std::size_t ii = 0; ii < instances.size(); ++ii) {
        NodeId c = instances[ii].source;
        std::map<NodeId, BitVec>& per_node = out.agreed[instances[ii].instance_id];
        for (NodeId x : parts) {
            if (x == c) {
                per_node[x] = val[ii][c][Path{c}];
            } else {
                per_node[x] = resolve(val[ii][x], parts, c, depth, value_bits, Path{c});
            }
        }
    }
    return out;
}

std::map<NodeId, BitVec> om_broadcast(SyncNet& net, StepTag tag,
                                      const std::vector<NodeId>& participants, int depth,
                                      NodeId source, const BitVec& input,
                                      std::size_t value_bits, Adversary& adversary,
                                      AdvContext ctx) {
    std::vector<BroadcastInstance> one{{0, source, input}};
    return run_broadcast_phase(net, tag, participants, depth, one, value_bits, adversary,
                               std::move(ctx))
        .agreed[0];
}

}  // namespace mvba
