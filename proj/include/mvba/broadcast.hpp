// Oral-messages broadcast with a fault budget, in the exponential
// information gathering formulation.  Round 1: the commander sends its value
// to every other participant.  Round r in [2, depth+1]: every non-commander
// relays each value it stored at level r-1 along paths that do not yet
// contain it, to every participant other than itself and the commander.
// Each node then resolves its tree bottom-up by strict majority, with the
// all-zero value as the default for ties.  With more than 3*depth
// participants and at most depth faulty ones, all fault-free participants
// decide the same value, and that value is the commander's input when the
// commander is fault-free.
//
// All instances of a phase advance through the network together, one
// engine step per round, so a rushing adversary sees the honest traffic of
// the current round across every instance before its own messages are
// composed.
#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "mvba/adversary.hpp"
#include "mvba/bitvec.hpp"
#include "mvba/simnet.hpp"

namespace mvba {

struct BroadcastInstance {
    int instance_id = 0;
    NodeId source = -1;
    BitVec input;  // resized to value_bits before round 1
};

struct BroadcastOutcome {
    // agreed[instance_id][participant] = decided value; the commander's own
    // entry is its input.
    std::map<int, std::map<NodeId, BitVec>> agreed;
    // True when some hook returned a value different from the honest one.
    bool adversary_deviated = false;
};

BroadcastOutcome run_broadcast_phase(SyncNet& net, StepTag tag,
                                     const std::vector<NodeId>& participants, int depth,
                                     const std::vector<BroadcastInstance>& instances,
                                     std::size_t value_bits, Adversary& adversary,
                                     AdvContext ctx);

// Single-instance convenience wrapper.
std::map<NodeId, BitVec> om_broadcast(SyncNet& net, StepTag tag,
                                      const std::vector<NodeId>& participants, int depth,
                                      NodeId source, const BitVec& input,
                                      std::size_t value_bits, Adversary& adversary,
                                      AdvContext ctx);

}  // namespace mvba
