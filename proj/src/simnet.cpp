#include "mvba/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mvba {

const char* step_tag_name(StepTag tag) {
    switch (tag) {
        case StepTag::Data: return "Data";
        case StepTag::HashExchange: return "HashExchange";
        case StepTag::NotificationBA: return "NotificationBA";
        case StepTag::ExtendedBA: return "ExtendedBA";
    }
    throw std::logic_error("unknown step tag");
}

nlohmann::json RunMetrics::to_json() const {
    return {{"bits_data", bits_data},
            {"bits_hash", bits_hash},
            {"bits_notification_measured", bits_notification_measured},
            {"bits_extended_measured", bits_extended_measured},
            {"bits_notification_model", bits_notification_model},
            {"bits_extended_model", bits_extended_model},
            {"generations_run", generations_run},
            {"blocks_completed", blocks_completed},
            {"extended_steps", extended_steps},
            {"deception_events", deception_events},
            {"disagreement_events", disagreement_events},
            {"misbehaving_generations", misbehaving_generations},
            {"padded_bits", padded_bits}};
}

void TraceSink::emit(const nlohmann::json& event) {
    (*out_) << event.dump() << '\n';
}

std::map<NodeId, std::vector<RoundMessage>> SyncNet::step(
    StepTag tag, std::vector<RoundMessage> messages) {
    std::uint64_t step_bits = 0;
    for (const auto& m : messages) {
        if (m.sender < 0 || m.sender >= graph_->n() || m.recipient < 0 ||
            m.recipient >= graph_->n() || m.sender == m.recipient)
            throw std::logic_error("malformed round message endpoints");
        if (graph_->isolated(m.sender) || graph_->isolated(m.recipient))
            throw std::logic_error("message touches an isolated node");
        if (m.bits.empty()) throw std::logic_error("empty round message");
        if (m.tag != tag) throw std::logic_error("message tag does not match step tag");
        step_bits += m.bits.size();
    }
    switch (tag) {
        case StepTag::Data: metrics_.bits_data += step_bits; break;
        case StepTag::HashExchange: metrics_.bits_hash += step_bits; break;
        case StepTag::NotificationBA: metrics_.bits_notification_measured += step_bits; break;
        case StepTag::ExtendedBA: metrics_.bits_extended_measured += step_bits; break;
    }
    if (trace_)
        trace_->emit({{"type", "step"},
                      {"index", step_index_},
                      {"tag", step_tag_name(tag)},
                      {"messages", messages.size()},
                      {"bits", step_bits}});
    ++step_index_;

    std::map<NodeId, std::vector<RoundMessage>> inboxes;
    for (auto& m : messages) inboxes[m.recipient].push_back(std::move(m));
    for (auto& [node, box] : inboxes) {
        (void)node;
        std::stable_sort(box.begin(), box.end(),
                         [](const RoundMessage& a, const RoundMessage& b) {
                             return a.sender < b.sender;
                         });
    }
    return inboxes;
}

std::uint64_t ideal_broadcast_cost(int n, std::uint64_t payload_bits, double c) {
    if (n < 2) throw ConfigError("broadcast cost needs n >= 2");
    if (payload_bits == 0) throw ConfigError("broadcast cost needs a nonempty payload");
    if (!(c > 0.0)) throw ConfigError("broadcast cost constant must be positive");
    auto unit = static_cast<std::uint64_t>(std::llround(c * n * n));
    return unit * payload_bits;
}

Rational security_bound(int block_bits, int key_bits, int fault_budget) {
    if (fault_budget < 0) throw ConfigError("fault budget must be non-negative");
    Rational per_check = collision_bound(block_bits, key_bits);
    if (per_check >= 1) {
        throw ConfigError("security bound undefined: 2^-k * D/k = " +
                          per_check.str() + " >= 1; enlarge k or shrink D");
    }
    Rational rho = 1 - per_check;
    int exponent = fault_budget * (fault_budget + 1);
    Rational out = 1;
    for (int i = 0; i < exponent; ++i) out *= rho;
    return out;
}

nlohmann::json ComplexityReport::to_json() const {
    return {{"c_measured", c_measured},
            {"c_model", c_model},
            {"bound_model", bound_model},
            {"model_data_term", model_data_term},
            {"model_hash_term", model_hash_term},
            {"model_notification_term", model_notification_term},
            {"model_extended_term", model_extended_term},
            {"alpha_measured", alpha_measured},
            {"alpha_model", alpha_model}};
}

ComplexityReport complexity_report(const RunMetrics& metrics, int n, int t,
                                   std::uint64_t message_bits, int block_bits,
                                   int key_bits, double c) {
    if (message_bits == 0) throw ConfigError("complexity report needs message_bits > 0");
    if (block_bits <= 0 || key_bits <= 0 || block_bits % key_bits != 0)
        throw ConfigError("complexity report needs k | D");
    ComplexityReport rep;
    std::uint64_t d = static_cast<std::uint64_t>(block_bits);
    std::uint64_t digest_blocks = static_cast<std::uint64_t>(block_bits / key_bits);
    std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1);

    rep.model_data_term = static_cast<std::uint64_t>(n - 1) * d * metrics.blocks_completed;
    rep.model_hash_term =
        pairs * (static_cast<std::uint64_t>(key_bits) + digest_blocks) * metrics.blocks_completed;
    rep.model_notification_term = metrics.bits_notification_model;
    rep.model_extended_term = metrics.bits_extended_model;
    rep.c_model = rep.model_data_term + rep.model_hash_term +
                  rep.model_notification_term + rep.model_extended_term;
    rep.c_measured = metrics.total_measured();

    // A priori bound with the worst-case t(t+1) extended steps, instantiated
    // at the effective (padded) message length actually protected.
    std::uint64_t total_blocks = (message_bits + d - 1) / d;
    std::uint64_t l_eff = total_blocks * d;
    std::uint64_t bcast_bit = ideal_broadcast_cost(n, 1, c);
    rep.bound_model = static_cast<std::uint64_t>(n - 1) * l_eff +
                      pairs * (static_cast<std::uint64_t>(key_bits) + digest_blocks) * total_blocks +
                      static_cast<std::uint64_t>(n) * bcast_bit * total_blocks +
                      static_cast<std::uint64_t>(n) * d * bcast_bit *
                          static_cast<std::uint64_t>(t) * (t + 1);

    rep.alpha_measured = static_cast<double>(rep.c_measured) / static_cast<double>(message_bits);
    rep.alpha_model = static_cast<double>(rep.c_model) / static_cast<double>(message_bits);
    return rep;
}

}  // namespace mvba
