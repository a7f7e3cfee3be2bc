// Fault diagnosis state shared by all fault-free nodes.
//
// The diagnosis graph is the complete graph on nodes 0..n-1.  Every edge is
// either g (the endpoints have never contradicted each other) or f (a past
// dispute proved one endpoint faulty).  Edges only move from g to f.  A node
// accused by more than t non-isolated nodes is isolated and stops
// participating; isolation never reverts.
//
// After any dispute, data dissemination runs over a spanning tree of g-edges
// rooted at the source.  analyze_dispute turns a set of broadcast transcripts
// into a verdict (new f-edges plus self-contradictory nodes); all fault-free
// nodes hold identical transcripts, so they reach identical verdicts.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvba/bitvec.hpp"
#include "mvba/common.hpp"
#include "mvba/gf.hpp"

namespace mvba {

class DiagnosisGraph {
  public:
    DiagnosisGraph(int n, int t);

    int n() const { return n_; }
    int t() const { return t_; }

    bool is_f(NodeId a, NodeId b) const;
    // g means: distinct valid endpoints with no f mark.  Isolation is
    // tracked separately; a g-edge to an isolated node is never used.
    bool is_g(NodeId a, NodeId b) const { return a != b && !is_f(a, b); }

    // Marks edge {a, b} as f.  Returns true if the edge was g before.
    bool mark_f(NodeId a, NodeId b);

    void isolate(NodeId a);
    bool isolated(NodeId a) const { return isolated_.count(a) > 0; }

    // Number of f-edges from a to currently non-isolated nodes.
    int accusation_count(NodeId a) const;

    std::vector<NodeId> non_isolated() const;
    const std::set<std::pair<NodeId, NodeId>>& f_edges() const { return f_edges_; }
    const std::set<NodeId>& isolated_set() const { return isolated_; }

    nlohmann::json to_json() const;
    bool operator==(const DiagnosisGraph&) const = default;

  private:
    void check_node(NodeId a) const;

    int n_;
    int t_;
    std::set<std::pair<NodeId, NodeId>> f_edges_;  // normalized (lo, hi)
    std::set<NodeId> isolated_;
};

// Applies the accusation threshold until it stops firing: any non-isolated
// node with more than t accusations from non-isolated nodes is isolated,
// which can in turn push others over the threshold.  Returns the nodes newly
// isolated, in the order they fell.
std::vector<NodeId> update_isolation(DiagnosisGraph& graph);

struct SpanningTree {
    NodeId root = 0;
    std::map<NodeId, NodeId> parent;                 // every non-root, non-isolated node
    std::map<NodeId, std::vector<NodeId>> children;  // ascending
    std::vector<std::vector<NodeId>> levels;         // levels[0] = {root}

    bool operator==(const SpanningTree&) const = default;
};

// Breadth-first tree over g-edges among non-isolated nodes, rooted at node 0.
// Frontier and neighbor expansion are in ascending id order, so every
// fault-free node derives the same tree.  Throws SourceFaultyError if the
// source is isolated and std::logic_error if some non-isolated node is
// unreachable (the admissibility invariants rule that out).
SpanningTree build_spanning_tree(const DiagnosisGraph& graph);

// Do all mutually accusing non-isolated peer pairs have a 2-hop g-path through
// a third non-isolated peer (the source is not a valid intermediate)?
bool check_two_hop_lemma(const DiagnosisGraph& graph);

// One node's broadcast claim about its generation: the payload it held, every
// keyed digest it sent and received, and the flag it announced.  For the
// source, claimed_payload is the payload it says it disseminated.
struct Transcript {
    NodeId node = -1;
    bool claimed_flag = false;  // true = announced "inconsistent"
    BitVec claimed_payload;
    std::map<NodeId, KeyedDigest> claimed_sent;      // recipient -> digest
    std::map<NodeId, KeyedDigest> claimed_received;  // sender -> digest

    bool operator==(const Transcript&) const = default;
};

// Wire layout (fixed per node given the active set): flag bit, payload
// (block_bits), sent digests to active peers ascending (key then digest,
// key_bits each), received digests from active peers ascending.
std::size_t transcript_bits(std::size_t active_count, int block_bits, int key_bits);
BitVec encode_transcript(const Transcript& t, const std::vector<NodeId>& active,
                         int block_bits, int key_bits);
Transcript decode_transcript(const BitVec& bits, NodeId node,
                             const std::vector<NodeId>& active, int block_bits,
                             int key_bits);

// Common knowledge each fault-free node brings to dispute analysis: the
// agreed flag vector from the notification broadcast and the dissemination
// edges (sender, receiver) the payload was prescribed to travel.
struct DisputeContext {
    std::map<NodeId, bool> agreed_flags;
    std::vector<std::pair<NodeId, NodeId>> dissemination_edges;
    int block_bits = 0;
    int key_bits = 0;
};

struct DisputeVerdict {
    std::set<std::pair<NodeId, NodeId>> new_f_edges;  // normalized, currently g
    std::set<NodeId> self_contradictory;              // isolated immediately

    bool empty() const { return new_f_edges.empty() && self_contradictory.empty(); }
    bool operator==(const DisputeVerdict&) const = default;
};

// Deterministic replay of the generation against the broadcast claims.
//
// Self-contradiction checks, per non-isolated node x:
//   - transcript missing or structurally malformed;
//   - claimed flag differs from the agreed flag vector;
//   - some digest x claims to have sent does not recompute from x's own
//     claimed payload (an honest sender always hashes the payload it holds);
//   - the claimed flag contradicts recomputation over the digests x claims
//     to have received from the senders it was prescribed to check
//     (its current g-neighbors): flag raised with every check passing, or
//     flag clear with some check failing.
// Cross checks over claim pairs:
//   - a dissemination edge whose endpoints claim different payloads;
//   - a sender's claimed sent digest differing from the recipient's claimed
//     received digest.
// A fired cross check marks the edge f.  Honest nodes never trip any rule,
// so no f-edge ever joins two fault-free nodes and a triggered dispute with
// no new f-edge always exposes a self-contradictory flag-raiser.
DisputeVerdict analyze_dispute(const DiagnosisGraph& graph,
                               const std::map<NodeId, Transcript>& transcripts,
                               const DisputeContext& ctx);

}  // namespace mvba
