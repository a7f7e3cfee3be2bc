// Byzantine behavior is injected at the wire: every node runs the honest
// state machine, and immediately before a controlled node's message is
// handed to the network the adversary may replace it.  Each hook receives
// the honest value and returns what is actually sent; the default is the
// honest value.  Hooks fire after the honest messages of the same round are
// composed, and the rushing view exposes the honest messages addressed to
// controlled nodes, so rushing strategies are expressible.  Strategies draw
// randomness only from the adversary substream in the context, which keeps
// honest key draws unperturbed by adversary decisions.
#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mvba/bitvec.hpp"
#include "mvba/common.hpp"
#include "mvba/diagnosis.hpp"
#include "mvba/rng.hpp"
#include "mvba/simnet.hpp"

namespace mvba {

struct AdvContext {
    int block = 0;    // message block index
    int attempt = 0;  // re-run attempt within the block
    StepTag phase = StepTag::Data;
    const DiagnosisGraph* graph = nullptr;
    const std::vector<NodeId>* active = nullptr;
    // Honest messages addressed to controlled nodes in the current round.
    const std::vector<RoundMessage>* rush_view = nullptr;
    RngStream* rng = nullptr;
};

struct OmInstanceInfo {
    int instance_id = 0;
    NodeId source = -1;
    int round = 0;  // 1-based broadcast round
};

class Adversary {
  public:
    explicit Adversary(std::set<NodeId> controlled) : controlled_(std::move(controlled)) {}
    virtual ~Adversary() = default;

    const std::set<NodeId>& controlled() const { return controlled_; }
    bool controls(NodeId node) const { return controlled_.count(node) > 0; }

    // Step 1: payload the source sends each recipient (direct or tree child).
    virtual BitVec source_payload(const AdvContext&, NodeId /*recipient*/,
                                  const BitVec& honest) {
        return honest;
    }
    // Step 1, tree mode: payload an interior node forwards to a child.
    virtual BitVec forward_payload(const AdvContext&, NodeId /*self*/, NodeId /*child*/,
                                   const BitVec& honest) {
        return honest;
    }
    // Step 2: keyed digest sent to one recipient.
    virtual KeyedDigest digest_message(const AdvContext&, NodeId /*self*/,
                                       NodeId /*recipient*/, const KeyedDigest& honest) {
        return honest;
    }
    // Step 3: the flag fed into the node's notification broadcast.
    virtual bool notification_flag(const AdvContext&, NodeId /*self*/, bool honest) {
        return honest;
    }
    // Extended step: the transcript fed into the node's broadcast.
    virtual Transcript transcript_claim(const AdvContext&, NodeId /*self*/,
                                        const Transcript& honest) {
        return honest;
    }
    // Any broadcast round: value sent for one path slot to one recipient.
    // path is the recipient-side tree slot being filled; path.back() == self.
    virtual BitVec om_value(const AdvContext&, const OmInstanceInfo&, NodeId /*self*/,
                            NodeId /*recipient*/, const std::vector<NodeId>& /*path*/,
                            const BitVec& honest) {
        return honest;
    }

  private:
    std::set<NodeId> controlled_;
};

struct AdversaryParams {
    std::set<NodeId> controlled;     // empty = strategy default
    int equivocation_group = 1;      // equivocating_source: peers given the altered copy
    NodeId target = -1;              // digest_liar / transcript_liar victim; -1 rotates
    unsigned fuzz_permille = 300;    // fuzz: mutation probability per hook, in 1/1000
};

// Strategy catalogue.  Names: honest, equivocating_source, digest_liar,
// false_flagger, tree_corruptor, transcript_liar, colluders, fuzz.
std::unique_ptr<Adversary> make_adversary(const std::string& name,
                                          const AdversaryParams& params, int n, int t);
std::vector<std::string> adversary_names();

}  // namespace mvba
