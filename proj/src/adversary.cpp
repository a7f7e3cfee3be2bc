#include "mvba/adversary.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "mvba/gf.hpp"

namespace mvba {
namespace {

NodeId lowest_g_neighbor(const AdvContext& ctx, NodeId self) {
    for (NodeId v : *ctx.active) {
        if (v != self && ctx.graph->is_g(self, v)) return v;
    }
    return -1;
}

// Replace every claimed sent digest with a recomputation from the claimed
// payload, i.e. deny having sent anything inconsistent.  This defeats the
// self-checks and pushes the contradiction onto a cross-check with the
// recipient, which costs the liar one f-edge per generation instead of
// immediate isolation.
Transcript deny_sent(Transcript tr) {
    for (auto& [peer, h] : tr.claimed_sent) h.digest = keyed_hash(tr.claimed_payload, h.key);
    return tr;
}

struct GenerationTracker {
    int block = -1;
    int attempt = -1;
    bool fresh(const AdvContext& ctx) {
        if (ctx.block == block && ctx.attempt == attempt) return false;
        block = ctx.block;
        attempt = ctx.attempt;
        return true;
    }
};

// Controls the source.  Hands an altered copy of each block to the first
// equivocation_group recipients and the true copy to the rest, keeps every
// digest consistent with what its recipient actually holds, suppresses its
// own flag, and claims the true copy everywhere in its transcript.  Honest
// cross-checks still catch the split unless every digest comparison between
// differing copies collides, so each escalation costs exactly the edge to
// one altered recipient, and the source survives t such generations before
// the accusation threshold removes it.
class EquivocatingSource : public Adversary {
  public:
    EquivocatingSource(std::set<NodeId> controlled, int group)
        : Adversary(std::move(controlled)), group_(group) {}

    BitVec source_payload(const AdvContext& ctx, NodeId recipient, const BitVec& honest) override {
        if (gen_.fresh(ctx)) {
            sent_.clear();
            altered_ = 0;
        }
        BitVec out = honest;
        if (altered_ < group_) {
            out.flip_bit(0);
            ++altered_;
        }
        sent_[recipient] = out;
        return out;
    }

    KeyedDigest digest_message(const AdvContext& ctx, NodeId /*self*/, NodeId recipient,
                               const KeyedDigest& honest) override {
        return {honest.key, keyed_hash(held_by(ctx, recipient), honest.key)};
    }

    bool notification_flag(const AdvContext&, NodeId, bool) override { return false; }

    Transcript transcript_claim(const AdvContext&, NodeId, const Transcript& honest) override {
        Transcript tr = honest;  // claimed payload is the true copy
        tr.claimed_flag = false;
        for (auto& [peer, h] : tr.claimed_sent) h.digest = keyed_hash(tr.claimed_payload, h.key);
        for (auto& [peer, h] : tr.claimed_received)
            h.digest = keyed_hash(tr.claimed_payload, h.key);
        return tr;
    }

  private:
    // The copy a node holds: its own in direct mode, its root-child
    // ancestor's in tree mode (honest interiors forward verbatim).
    const BitVec& held_by(const AdvContext& ctx, NodeId recipient) const {
        if (ctx.graph->f_edges().empty()) return sent_.at(recipient);
        SpanningTree tree = build_spanning_tree(*ctx.graph);
        NodeId a = recipient;
        while (tree.parent.at(a) != 0) a = tree.parent.at(a);
        return sent_.at(a);
    }

    int group_;
    int altered_ = 0;
    GenerationTracker gen_;
    std::map<NodeId, BitVec> sent_;
};

// Sends one chosen victim a wrong digest each generation and denies it in
// the transcript.  The victim's flag forces the extended step and the
// digest cross-check lands one f-edge on (liar, victim); the victim was a
// g-neighbor, so the pool rotates by itself until the liar crosses the
// accusation threshold after t+1 generations.
class DigestLiar : public Adversary {
  public:
    DigestLiar(std::set<NodeId> controlled, NodeId fixed_target)
        : Adversary(std::move(controlled)), fixed_target_(fixed_target) {}

    KeyedDigest digest_message(const AdvContext& ctx, NodeId self, NodeId recipient,
                               const KeyedDigest& honest) override {
        if (gen_.fresh(ctx)) victim_ = pick_victim(ctx, self);
        if (recipient != victim_) return honest;
        KeyedDigest out = honest;
        out.digest.value ^= 1u;
        return out;
    }

    Transcript transcript_claim(const AdvContext&, NodeId, const Transcript& honest) override {
        return deny_sent(honest);
    }

  private:
    NodeId pick_victim(const AdvContext& ctx, NodeId self) const {
        if (fixed_target_ >= 0 && fixed_target_ != self &&
            ctx.graph->is_g(self, fixed_target_)) {
            return fixed_target_;
        }
        return lowest_g_neighbor(ctx, self);
    }

    NodeId fixed_target_;
    NodeId victim_ = -1;
    GenerationTracker gen_;
};

// Raises its flag with nothing wrong and then claims, truthfully, digests
// that all match: the flag check convicts it on its own claims in a single
// extended step.
class FalseFlagger : public Adversary {
  public:
    using Adversary::Adversary;
    bool notification_flag(const AdvContext&, NodeId, bool) override { return true; }
};

// Raises its flag and forges its transcript to blame a g-neighbor for a
// mismatched digest.  The claims are self-consistent, but the digest
// cross-check against the framed sender puts the new f-edge on the pair
// containing the liar, so framing buys isolation no slower than lying.
class TranscriptLiar : public Adversary {
  public:
    using Adversary::Adversary;

    bool notification_flag(const AdvContext&, NodeId, bool) override { return true; }

    Transcript transcript_claim(const AdvContext& ctx, NodeId self,
                                const Transcript& honest) override {
        Transcript tr = honest;
        NodeId victim = lowest_g_neighbor(ctx, self);
        if (victim >= 0) {
            auto it = tr.claimed_received.find(victim);
            if (it != tr.claimed_received.end()) it->second.digest.value ^= 1u;
        }
        return tr;
    }
};

// Two-stage attack on the dissemination tree.  The source equivocates once
// in the very first generation, sacrificing an edge to the lowest fault-free
// recipient; re-runs then route through a spanning tree where the second
// controlled node is that recipient's parent and corrupts the forwarded
// copy.  Once further edges push it to leaf position it falls back to
// digest lies until isolated; the source behaves honestly after its single
// equivocation, so the session still decides every block.
class TreeCorruptor : public Adversary {
  public:
    TreeCorruptor(std::set<NodeId> controlled, NodeId helper)
        : Adversary(std::move(controlled)), helper_(helper) {}

    BitVec source_payload(const AdvContext& ctx, NodeId recipient, const BitVec& honest) override {
        refresh(ctx);
        if (!equivocating_now_) return honest;
        BitVec out = honest;
        if (!altered_one_ && !controls(recipient)) {
            out.flip_bit(0);
            altered_one_ = true;
        }
        sent_[recipient] = out;
        return out;
    }

    BitVec forward_payload(const AdvContext& ctx, NodeId self, NodeId /*child*/,
                           const BitVec& honest) override {
        refresh(ctx);
        if (self != helper_) return honest;
        corrupting_now_ = true;
        BitVec out = honest;
        out.flip_bit(0);
        return out;
    }

    KeyedDigest digest_message(const AdvContext& ctx, NodeId self, NodeId recipient,
                               const KeyedDigest& honest) override {
        refresh(ctx);
        if (self == 0) {
            if (!equivocating_now_) return honest;
            return {honest.key, keyed_hash(sent_.at(recipient), honest.key)};
        }
        if (self == helper_ && !corrupting_now_) {
            if (victim_ < 0) victim_ = lowest_g_neighbor(ctx, self);
            if (recipient == victim_) {
                KeyedDigest out = honest;
                out.digest.value ^= 1u;
                return out;
            }
        }
        return honest;
    }

    bool notification_flag(const AdvContext& ctx, NodeId self, bool honest) override {
        refresh(ctx);
        if (self == 0 && equivocating_now_) return false;
        return honest;
    }

    Transcript transcript_claim(const AdvContext& ctx, NodeId self,
                                const Transcript& honest) override {
        refresh(ctx);
        if (self == 0 && equivocating_now_) {
            Transcript tr = honest;
            tr.claimed_flag = false;
            for (auto& [p, h] : tr.claimed_sent) h.digest = keyed_hash(tr.claimed_payload, h.key);
            for (auto& [p, h] : tr.claimed_received)
                h.digest = keyed_hash(tr.claimed_payload, h.key);
            return tr;
        }
        // Interior corruption needs no transcript lie: the honest claims
        // pin the payload mismatch onto the edge to the corrupted child.
        if (self == helper_ && !corrupting_now_) return deny_sent(honest);
        return honest;
    }

  private:
    void refresh(const AdvContext& ctx) {
        if (!gen_.fresh(ctx)) return;
        equivocating_now_ = ctx.block == 0 && ctx.attempt == 0;
        altered_one_ = false;
        corrupting_now_ = false;
        victim_ = -1;
        sent_.clear();
    }

    NodeId helper_;
    bool equivocating_now_ = false;
    bool altered_one_ = false;
    bool corrupting_now_ = false;
    NodeId victim_ = -1;
    GenerationTracker gen_;
    std::map<NodeId, BitVec> sent_;
};

// The controlled nodes burn the full diagnosis budget one at a time: the
// lowest non-isolated one runs the digest-liar play while the others stay
// honest, which yields exactly t+1 extended steps per liar and t(t+1) in
// total before the last one is isolated.
class Colluders : public Adversary {
  public:
    using Adversary::Adversary;

    KeyedDigest digest_message(const AdvContext& ctx, NodeId self, NodeId recipient,
                               const KeyedDigest& honest) override {
        refresh(ctx);
        if (self != liar_ || recipient != victim_) return honest;
        KeyedDigest out = honest;
        out.digest.value ^= 1u;
        return out;
    }

    Transcript transcript_claim(const AdvContext& ctx, NodeId self,
                                const Transcript& honest) override {
        refresh(ctx);
        if (self == liar_) return deny_sent(honest);
        return honest;
    }

  private:
    void refresh(const AdvContext& ctx) {
        if (!gen_.fresh(ctx)) return;
        liar_ = -1;
        victim_ = -1;
        for (NodeId c : controlled()) {
            if (!ctx.graph->isolated(c)) {
                liar_ = c;
                break;
            }
        }
        if (liar_ >= 0) victim_ = lowest_g_neighbor(ctx, liar_);
    }

    NodeId liar_ = -1;
    NodeId victim_ = -1;
    GenerationTracker gen_;
};

// Mutates every hook independently with the configured probability, using
// only the adversary substream.  No strategy, just randomized pressure on
// every rule path at once.
class Fuzzer : public Adversary {
  public:
    Fuzzer(std::set<NodeId> controlled, unsigned permille)
        : Adversary(std::move(controlled)), permille_(std::min(permille, 1000u)) {}

    BitVec source_payload(const AdvContext& ctx, NodeId, const BitVec& honest) override {
        return maybe_flip(ctx, honest);
    }
    BitVec forward_payload(const AdvContext& ctx, NodeId, NodeId, const BitVec& honest) override {
        return maybe_flip(ctx, honest);
    }
    KeyedDigest digest_message(const AdvContext& ctx, NodeId, NodeId,
                               const KeyedDigest& honest) override {
        if (!roll(ctx)) return honest;
        KeyedDigest out = honest;
        FieldElement& field = ctx.rng->coin() ? out.key : out.digest;
        field.value ^= 1u << ctx.rng->below(field.width);
        return out;
    }
    bool notification_flag(const AdvContext& ctx, NodeId, bool honest) override {
        return roll(ctx) ? !honest : honest;
    }
    Transcript transcript_claim(const AdvContext& ctx, NodeId, const Transcript& honest) override {
        if (!roll(ctx)) return honest;
        Transcript tr = honest;
        switch (ctx.rng->below(4)) {
            case 0:
                tr.claimed_flag = !tr.claimed_flag;
                break;
            case 1:
                if (!tr.claimed_payload.empty()) {
                    tr.claimed_payload.flip_bit(ctx.rng->below(tr.claimed_payload.size()));
                }
                break;
            case 2:
                corrupt_entry(ctx, tr.claimed_sent);
                break;
            default:
                corrupt_entry(ctx, tr.claimed_received);
                break;
        }
        return tr;
    }
    BitVec om_value(const AdvContext& ctx, const OmInstanceInfo&, NodeId, NodeId,
                    const std::vector<NodeId>&, const BitVec& honest) override {
        return maybe_flip(ctx, honest);
    }

  private:
    bool roll(const AdvContext& ctx) const { return ctx.rng->chance(permille_, 1000); }

    BitVec maybe_flip(const AdvContext& ctx, const BitVec& honest) const {
        if (honest.empty() || !roll(ctx)) return honest;
        BitVec out = honest;
        out.flip_bit(ctx.rng->below(out.size()));
        return out;
    }

    void corrupt_entry(const AdvContext& ctx, std::map<NodeId, KeyedDigest>& m) const {
        if (m.empty()) return;
        auto it = m.begin();
        std::advance(it, static_cast<long>(ctx.rng->below(m.size())));
        it->second.digest.value ^= 1u << ctx.rng->below(it->second.digest.width);
    }

    unsigned permille_;
};

std::set<NodeId> default_controlled(const std::string& name) {
    if (name == "honest") return {};
    if (name == "equivocating_source") return {0};
    if (name == "tree_corruptor") return {0, 1};
    if (name == "colluders") return {1, 2};
    return {1};
}

}  // namespace

std::unique_ptr<Adversary> make_adversary(const std::string& name,
                                          const AdversaryParams& params, int n, int t) {
    std::set<NodeId> controlled =
        params.controlled.empty() ? default_controlled(name) : params.controlled;
    for (NodeId c : controlled) {
        if (c < 0 || c >= n) throw ConfigError("controlled node id out of range");
    }
    if (static_cast<int>(controlled.size()) > t) {
        throw ConfigError("controlled set exceeds the fault budget t=" + std::to_string(t));
    }
    if (name == "honest") return std::make_unique<Adversary>(std::move(controlled));
    if (controlled.empty()) throw ConfigError(name + " needs at least one controlled node");
    if (name == "equivocating_source") {
        if (!controlled.count(0)) {
            throw ConfigError("equivocating_source must control the source");
        }
        if (params.equivocation_group < 1) {
            throw ConfigError("equivocation group must be at least 1");
        }
        return std::make_unique<EquivocatingSource>(std::move(controlled),
                                                    params.equivocation_group);
    }
    if (name == "digest_liar") {
        return std::make_unique<DigestLiar>(std::move(controlled), params.target);
    }
    if (name == "false_flagger") return std::make_unique<FalseFlagger>(std::move(controlled));
    if (name == "tree_corruptor") {
        if (!controlled.count(0) || controlled.size() < 2) {
            throw ConfigError("tree_corruptor needs the source plus a second controlled node");
        }
        NodeId helper = -1;
        for (NodeId c : controlled) {
            if (c != 0) {
                helper = c;
                break;
            }
        }
        return std::make_unique<TreeCorruptor>(std::move(controlled), helper);
    }
    if (name == "transcript_liar") {
        return std::make_unique<TranscriptLiar>(std::move(controlled));
    }
    if (name == "colluders") {
        if (controlled.size() < 2 || controlled.count(0)) {
            throw ConfigError("colluders needs two or more controlled non-source nodes");
        }
        return std::make_unique<Colluders>(std::move(controlled));
    }
    if (name == "fuzz") {
        return std::make_unique<Fuzzer>(std::move(controlled), params.fuzz_permille);
    }
    throw ConfigError("unknown adversary: " + name);
}

std::vector<std::string> adversary_names() {
    return {"honest",         "equivocating_source", "digest_liar", "false_flagger",
            "tree_corruptor", "transcript_liar",     "colluders",   "fuzz"};
}

}  // namespace mvba
