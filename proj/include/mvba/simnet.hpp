// Deterministic synchronous round engine and bit accounting.
//
// Each step delivers a batch of messages atomically: nothing sent in a step
// is visible before the step completes, which is what makes "keys are only
// revealed after all payloads are committed" enforceable by construction.
// Every delivered message increments exactly one measured counter, selected
// by its step tag, by its exact bit length.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "mvba/bitvec.hpp"
#include "mvba/common.hpp"
#include "mvba/diagnosis.hpp"
#include "mvba/gf.hpp"

namespace mvba {

enum class StepTag { Data, HashExchange, NotificationBA, ExtendedBA };

const char* step_tag_name(StepTag tag);

struct RoundMessage {
    NodeId sender = -1;
    NodeId recipient = -1;
    StepTag tag = StepTag::Data;
    BitVec bits;
};

struct RunMetrics {
    // Measured track: exact bits delivered by the engine, by category.
    std::uint64_t bits_data = 0;
    std::uint64_t bits_hash = 0;
    std::uint64_t bits_notification_measured = 0;
    std::uint64_t bits_extended_measured = 0;
    // Model track: the idealized broadcast accounting (B = c * n^2 bits per
    // broadcast bit).  Incremented per completed block / extended step.
    std::uint64_t bits_notification_model = 0;
    std::uint64_t bits_extended_model = 0;

    std::uint64_t generations_run = 0;   // attempts, including re-runs
    std::uint64_t blocks_completed = 0;  // decided blocks (defaulted ones excluded)
    std::uint64_t extended_steps = 0;
    std::uint64_t deception_events = 0;
    std::uint64_t disagreement_events = 0;
    std::uint64_t misbehaving_generations = 0;  // attempts with any deviation
    std::uint64_t padded_bits = 0;

    std::uint64_t total_measured() const {
        return bits_data + bits_hash + bits_notification_measured + bits_extended_measured;
    }

    nlohmann::json to_json() const;
    bool operator==(const RunMetrics&) const = default;
};

// JSON-lines trace of every engine step plus caller-injected events.
class TraceSink {
  public:
    explicit TraceSink(std::ostream& out) : out_(&out) {}
    void emit(const nlohmann::json& event);

  private:
    std::ostream* out_;
};

class SyncNet {
  public:
    // The graph reference supplies the isolation view; messages touching an
    // isolated endpoint indicate a harness bug and throw.
    SyncNet(const DiagnosisGraph& graph, TraceSink* trace = nullptr)
        : graph_(&graph), trace_(trace) {}

    // Delivers one synchronous step.  Returns per-recipient inboxes ordered
    // by sender; counts every message against the tag's counter.
    std::map<NodeId, std::vector<RoundMessage>> step(StepTag tag,
                                                     std::vector<RoundMessage> messages);

    RunMetrics& metrics() { return metrics_; }
    const RunMetrics& metrics() const { return metrics_; }
    TraceSink* trace() { return trace_; }
    int steps_taken() const { return step_index_; }

  private:
    const DiagnosisGraph* graph_;
    TraceSink* trace_;
    RunMetrics metrics_;
    int step_index_ = 0;
};

// Idealized cost of one broadcast of payload_bits bits among n nodes:
// round(c * n^2) bits per payload bit.
std::uint64_t ideal_broadcast_cost(int n, std::uint64_t payload_bits, double c);

// Exact probability that every misbehaving generation is caught, i.e.
// (1 - 2^-k * D/k) ^ (t (t + 1)).  Requires 2^-k * D/k < 1.
Rational security_bound(int block_bits, int key_bits, int fault_budget);

struct ComplexityReport {
    std::uint64_t c_measured = 0;
    std::uint64_t c_model = 0;
    std::uint64_t bound_model = 0;
    // Model-side terms, exposed so tests can check the closed form term by
    // term: data, hash exchange, notification broadcasts, extended steps.
    std::uint64_t model_data_term = 0;
    std::uint64_t model_hash_term = 0;
    std::uint64_t model_notification_term = 0;
    std::uint64_t model_extended_term = 0;
    double alpha_measured = 0.0;
    double alpha_model = 0.0;

    nlohmann::json to_json() const;
};

// Assembles measured and model totals for a finished run.  message_bits is
// the unpadded message length (the alpha denominator).  The model track uses
// the closed forms over completed blocks, so c_model <= bound_model always
// holds; re-run attempts appear only in the measured track.
ComplexityReport complexity_report(const RunMetrics& metrics, int n, int t,
                                   std::uint64_t message_bits, int block_bits,
                                   int key_bits, double c);

}  // namespace mvba
