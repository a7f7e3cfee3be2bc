// Session driver for multi-valued broadcast with fault diagnosis.
//
// An l-bit message is carried in ceil(l/D) blocks of D bits (the last block
// zero-padded).  Each block runs as one generation:
//
//   1. The source disseminates the block: directly to every peer while the
//      diagnosis graph has no f-edges, along a g-edge spanning tree once it
//      does.
//   2. Every node sends every other node a keyed digest of the payload it
//      holds, with a fresh k-bit key per (sender, recipient, attempt).  Keys
//      stay invisible until all payloads are committed, because the engine
//      delivers each step atomically.
//   3. Every node checks the digests from its current g-neighbors against
//      its own payload and broadcasts a one-bit flag via oral-messages
//      broadcast.  All flags clear: the block is decided.  Any flag raised:
//      an extended step runs in which every node broadcasts its full
//      generation transcript and everyone applies the same dispute analysis,
//      yielding a new f-edge or a newly isolated node.  The generation then
//      re-runs with the same payload under the updated graph.
//
// A session ends when all blocks decide or the source is isolated, in which
// case the remaining blocks take the all-zero default at every node.
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mvba/adversary.hpp"
#include "mvba/bitvec.hpp"
#include "mvba/common.hpp"
#include "mvba/diagnosis.hpp"
#include "mvba/simnet.hpp"

namespace mvba {

struct ProtocolConfig {
    int n = 4;
    int t = 1;
    std::uint64_t message_bits = 64;  // l
    int block_bits = 16;              // D, the per-generation payload width
    int key_bits = 8;                 // k, the digest field width
    double broadcast_cost_factor = 1.0;  // c in the B = round(c*n^2) bit cost model
    std::uint64_t seed = 1;

    void validate() const;
    std::uint64_t blocks() const;
    std::uint64_t padded_message_bits() const;
    std::uint64_t padding_bits() const;
};

// Sweep schedule: k = round(log2 l), D = the smallest multiple of k at least
// l^(1-beta).  Larger messages get wider digests (smaller collision chance)
// and proportionally smaller hash overhead per transferred bit.
struct ScheduledParams {
    int key_bits = 0;
    int block_bits = 0;
};
ScheduledParams parameter_schedule(std::uint64_t message_bits, double beta);

enum class GenerationOutcome { Decided, DisputeEscalated, SourceIsolated };
const char* outcome_name(GenerationOutcome outcome);

struct GenerationRecord {
    int block = 0;
    int attempt = 0;
    GenerationOutcome outcome = GenerationOutcome::Decided;
    std::map<NodeId, BitVec> payloads;    // held per active node after step 1
    std::map<NodeId, bool> agreed_flags;  // consensus flag vector
    DisputeVerdict verdict;               // populated when escalated
    std::vector<NodeId> newly_isolated;
    bool adversary_deviated = false;
    // Decided while fault-free nodes held differing payloads: every digest
    // check a forged payload had to pass came up a collision.
    bool deception = false;
};

struct SessionResult {
    BitVec source_message;             // the l-bit input, ground truth
    std::map<NodeId, BitVec> outputs;  // per peer (1..n-1), l bits each
    bool default_terminated = false;
    DiagnosisGraph final_graph{4, 1};
    RunMetrics metrics;
    std::vector<GenerationRecord> records;

    // Agreement among fault-free peers, and validity against the source
    // message when the source is fault-free.
    bool all_fault_free_agree(const std::set<NodeId>& controlled) const;
};

SessionResult run_session(const ProtocolConfig& cfg, Adversary& adversary,
                          TraceSink* trace = nullptr);

}  // namespace mvba
