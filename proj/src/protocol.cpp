#include "mvba/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "mvba/broadcast.hpp"
#include "mvba/gf.hpp"
#include "mvba/rng.hpp"

namespace mvba {
namespace {

// A strategy may return any Transcript struct, but only the fixed wire
// layout travels: force the owner id, the payload width, and exactly one
// width-k digest pair per active peer.  Unfillable lies (missing entries)
// become zero digests, which are still claims the analysis can catch.
Transcript normalize_claim(Transcript tr, NodeId node, const std::vector<NodeId>& active,
                           int block_bits, int key_bits, std::uint32_t field_mask) {
    tr.node = node;
    tr.claimed_payload.resize(static_cast<std::size_t>(block_bits));
    auto fix = [&](std::map<NodeId, KeyedDigest>& m) {
        std::map<NodeId, KeyedDigest> out;
        for (NodeId peer : active) {
            if (peer == node) continue;
            auto it = m.find(peer);
            KeyedDigest h = it != m.end()
                                ? it->second
                                : KeyedDigest{FieldElement(0, key_bits), FieldElement(0, key_bits)};
            h.key = FieldElement(h.key.value & field_mask, key_bits);
            h.digest = FieldElement(h.digest.value & field_mask, key_bits);
            out[peer] = h;
        }
        m = std::move(out);
    };
    fix(tr.claimed_sent);
    fix(tr.claimed_received);
    return tr;
}

}  // namespace

void ProtocolConfig::validate() const {
    if (t < 1 || n <= 3 * t) {
        throw ConfigError("need n > 3t with t >= 1, got n=" + std::to_string(n) +
                          " t=" + std::to_string(t));
    }
    if (message_bits == 0) throw ConfigError("message must be non-empty");
    // Also validates the field width and that key_bits divides block_bits.
    if (collision_bound(block_bits, key_bits) >= 1) {
        throw ConfigError("per-check collision bound (D/k)/2^k must be below 1");
    }
    if (!(broadcast_cost_factor > 0.0)) {
        throw ConfigError("broadcast cost factor must be positive");
    }
}

std::uint64_t ProtocolConfig::blocks() const {
    auto d = static_cast<std::uint64_t>(block_bits);
    return (message_bits + d - 1) / d;
}

std::uint64_t ProtocolConfig::padded_message_bits() const {
    return blocks() * static_cast<std::uint64_t>(block_bits);
}

std::uint64_t ProtocolConfig::padding_bits() const {
    return padded_message_bits() - message_bits;
}

ScheduledParams parameter_schedule(std::uint64_t message_bits, double beta) {
    if (message_bits < 16) throw ConfigError("parameter schedule needs at least 16 bits");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
    int k = static_cast<int>(std::lround(std::log2(static_cast<double>(message_bits))));
    if (k < kMinFieldWidth || k > kMaxFieldWidth) {
        throw ConfigError("scheduled key width out of range");
    }
    double target = std::pow(static_cast<double>(message_bits), 1.0 - beta);
    // Sub-ulp slack keeps exact powers exact (pow(2^16, 0.5) must give D = 256,
    // not spill into the next multiple).
    auto mult = static_cast<std::uint64_t>(std::ceil(target / k - 1e-9));
    if (mult == 0) mult = 1;
    return ScheduledParams{k, k * static_cast<int>(mult)};
}

const char* outcome_name(GenerationOutcome outcome) {
    switch (outcome) {
        case GenerationOutcome::Decided: return "decided";
        case GenerationOutcome::DisputeEscalated: return "dispute_escalated";
        case GenerationOutcome::SourceIsolated: return "source_isolated";
    }
    return "unknown";
}

bool SessionResult::all_fault_free_agree(const std::set<NodeId>& controlled) const {
    const BitVec* ref = controlled.count(0) ? nullptr : &source_message;
    for (const auto& [peer, out] : outputs) {
        if (controlled.count(peer)) continue;
        if (!ref) {
            ref = &out;
        } else if (*ref != out) {
            return false;
        }
    }
    return true;
}

SessionResult run_session(const ProtocolConfig& cfg, Adversary& adversary, TraceSink* trace) {
    cfg.validate();
    for (NodeId c : adversary.controlled()) {
        if (c < 0 || c >= cfg.n) throw ConfigError("controlled node id out of range");
    }
    if (adversary.controlled().size() > static_cast<std::size_t>(cfg.t)) {
        throw ConfigError("adversary controls more nodes than the fault budget");
    }

    DiagnosisGraph graph(cfg.n, cfg.t);
    SyncNet net(graph, trace);
    RunMetrics& metrics = net.metrics();

    RngStream msg_rng(derive_seed(cfg.seed, seed_label::kMessage));
    RngStream adv_rng(derive_seed(cfg.seed, seed_label::kAdversary));
    std::vector<RngStream> key_rng;
    key_rng.reserve(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        key_rng.emplace_back(
            derive_seed(cfg.seed, seed_label::kNodeKeys + static_cast<std::uint64_t>(i)));
    }

    SessionResult res;
    res.source_message = msg_rng.bits(cfg.message_bits);
    metrics.padded_bits = cfg.padding_bits();
    BitVec padded = res.source_message;
    padded.resize(cfg.padded_message_bits());

    const std::uint64_t total_blocks = cfg.blocks();
    const int block_bits = cfg.block_bits;
    const int key_bits = cfg.key_bits;
    const std::uint64_t key_space = std::uint64_t{1} << key_bits;
    const auto field_mask = static_cast<std::uint32_t>(key_space - 1);

    std::map<NodeId, std::vector<BitVec>> decided;
    for (NodeId p = 1; p < cfg.n; ++p) {
        decided[p].assign(total_blocks, BitVec(static_cast<std::size_t>(block_bits)));
    }

    if (trace) {
        trace->emit({{"type", "session"},
                     {"n", cfg.n},
                     {"t", cfg.t},
                     {"message_bits", cfg.message_bits},
                     {"block_bits", block_bits},
                     {"key_bits", key_bits},
                     {"seed", cfg.seed}});
    }

    // The consensus a broadcast phase produced: all fault-free participants
    // must hold it identically, anything else is an engine/protocol bug.
    auto consensus_value = [&adversary](const std::map<NodeId, BitVec>& per_node) -> const BitVec& {
        const BitVec* ref = nullptr;
        for (const auto& [x, v] : per_node) {
            if (adversary.controls(x)) continue;
            if (!ref) {
                ref = &v;
            } else if (*ref != v) {
                throw std::logic_error("fault-free nodes disagree on a broadcast value");
            }
        }
        if (!ref) throw std::logic_error("broadcast had no fault-free participant");
        return *ref;
    };

    bool terminated = false;
    for (std::uint64_t b = 0; b < total_blocks && !terminated; ++b) {
        const BitVec truth = padded.slice(b * static_cast<std::uint64_t>(block_bits),
                                          static_cast<std::size_t>(block_bits));
        for (int attempt = 0;; ++attempt) {
            // Each escalation adds an f-edge or isolates a node, so attempts
            // are bounded by the diagnosis state space.
            if (attempt > cfg.n * cfg.n + 1) {
                throw std::logic_error("re-run budget exceeded without progress");
            }
            if (graph.isolated(0)) {
                res.default_terminated = true;
                terminated = true;
                break;
            }

            const std::vector<NodeId> active = graph.non_isolated();
            const int depth = cfg.t - static_cast<int>(graph.isolated_set().size());
            if (depth < 0) throw std::logic_error("isolated more nodes than the fault budget");

            GenerationRecord rec;
            rec.block = static_cast<int>(b);
            rec.attempt = attempt;
            ++metrics.generations_run;
            bool deviated = false;

            AdvContext ctx;
            ctx.block = static_cast<int>(b);
            ctx.attempt = attempt;
            ctx.graph = &graph;
            ctx.active = &active;
            ctx.rng = &adv_rng;

            // ---- step 1: payload dissemination ----
            ctx.phase = StepTag::Data;
            std::map<NodeId, BitVec> payload;
            payload[0] = truth;
            std::vector<std::pair<NodeId, NodeId>> diss_edges;

            auto disseminate = [&](const std::vector<std::pair<NodeId, NodeId>>& edges) {
                std::vector<RoundMessage> msgs;
                std::vector<RoundMessage> rush;
                std::vector<std::pair<NodeId, BitVec>> arriving;
                for (const auto& [u, v] : edges) {
                    if (adversary.controls(u)) continue;
                    const BitVec& out = payload.at(u);
                    msgs.push_back({u, v, StepTag::Data, out});
                    if (adversary.controls(v)) rush.push_back({u, v, StepTag::Data, out});
                    arriving.emplace_back(v, out);
                }
                ctx.rush_view = &rush;
                for (const auto& [u, v] : edges) {
                    if (!adversary.controls(u)) continue;
                    const BitVec& honest_out = payload.at(u);
                    BitVec out = u == 0 ? adversary.source_payload(ctx, v, honest_out)
                                        : adversary.forward_payload(ctx, u, v, honest_out);
                    out.resize(static_cast<std::size_t>(block_bits));
                    if (out != honest_out) deviated = true;
                    msgs.push_back({u, v, StepTag::Data, out});
                    arriving.emplace_back(v, std::move(out));
                }
                net.step(StepTag::Data, msgs);
                ctx.rush_view = nullptr;
                for (auto& [v, bits] : arriving) payload[v] = std::move(bits);
            };

            if (graph.f_edges().empty()) {
                for (NodeId r : active) {
                    if (r != 0) diss_edges.emplace_back(0, r);
                }
                disseminate(diss_edges);
            } else {
                SpanningTree tree = build_spanning_tree(graph);
                for (std::size_t lvl = 1; lvl < tree.levels.size(); ++lvl) {
                    std::vector<std::pair<NodeId, NodeId>> edges;
                    for (NodeId v : tree.levels[lvl]) edges.emplace_back(tree.parent.at(v), v);
                    diss_edges.insert(diss_edges.end(), edges.begin(), edges.end());
                    disseminate(edges);
                }
            }
            rec.payloads = payload;

            // ---- step 2: keyed digest exchange ----
            ctx.phase = StepTag::HashExchange;
            std::map<NodeId, std::map<NodeId, KeyedDigest>> sent_digests;
            std::map<NodeId, std::map<NodeId, KeyedDigest>> recv_digests;
            {
                std::vector<RoundMessage> msgs;
                std::vector<RoundMessage> rush;
                for (int pass = 0; pass < 2; ++pass) {
                    if (pass == 1) ctx.rush_view = &rush;
                    for (NodeId i : active) {
                        if ((pass == 0) == adversary.controls(i)) continue;
                        for (NodeId j : active) {
                            if (j == i) continue;
                            FieldElement key(
                                static_cast<std::uint32_t>(key_rng[static_cast<std::size_t>(i)]
                                                               .below(key_space)),
                                key_bits);
                            KeyedDigest h{key, keyed_hash(payload.at(i), key)};
                            if (pass == 1) {
                                KeyedDigest forged = adversary.digest_message(ctx, i, j, h);
                                forged.key = FieldElement(forged.key.value & field_mask, key_bits);
                                forged.digest =
                                    FieldElement(forged.digest.value & field_mask, key_bits);
                                if (!(forged == h)) deviated = true;
                                h = forged;
                            }
                            sent_digests[i][j] = h;
                            BitVec enc =
                                BitVec::from_u64(h.key.value, static_cast<std::size_t>(key_bits));
                            enc.append(BitVec::from_u64(h.digest.value,
                                                        static_cast<std::size_t>(key_bits)));
                            msgs.push_back({i, j, StepTag::HashExchange, enc});
                            if (pass == 0 && adversary.controls(j)) {
                                rush.push_back({i, j, StepTag::HashExchange, std::move(enc)});
                            }
                        }
                    }
                }
                net.step(StepTag::HashExchange, msgs);
                ctx.rush_view = nullptr;
                for (const auto& [i, per] : sent_digests) {
                    for (const auto& [j, h] : per) recv_digests[j][i] = h;
                }
            }

            // ---- step 3: consistency flags via broadcast ----
            ctx.phase = StepTag::NotificationBA;
            std::map<NodeId, bool> input_flag;
            for (NodeId i : active) {
                bool flag = false;
                for (NodeId s : active) {
                    if (s == i || !graph.is_g(s, i)) continue;
                    if (!digest_matches(payload.at(i), recv_digests.at(i).at(s))) {
                        flag = true;
                        break;
                    }
                }
                if (adversary.controls(i)) {
                    bool forged = adversary.notification_flag(ctx, i, flag);
                    if (forged != flag) deviated = true;
                    flag = forged;
                }
                input_flag[i] = flag;
            }
            std::vector<BroadcastInstance> flag_instances;
            for (NodeId i : active) {
                flag_instances.push_back({i, i, BitVec::from_u64(input_flag[i] ? 1 : 0, 1)});
            }
            BroadcastOutcome flag_out = run_broadcast_phase(
                net, StepTag::NotificationBA, active, depth, flag_instances, 1, adversary, ctx);
            deviated = deviated || flag_out.adversary_deviated;
            bool any_flag = false;
            for (NodeId i : active) {
                bool f = consensus_value(flag_out.agreed.at(i)).bit(0);
                rec.agreed_flags[i] = f;
                any_flag = any_flag || f;
            }

            if (!any_flag) {
                rec.outcome = GenerationOutcome::Decided;
                std::set<BitVec> fault_free_payloads;
                for (NodeId i : active) {
                    if (!adversary.controls(i)) fault_free_payloads.insert(payload.at(i));
                }
                if (fault_free_payloads.size() > 1) {
                    rec.deception = true;
                    ++metrics.deception_events;
                }
                for (NodeId p : active) {
                    if (p != 0) decided[p][b] = payload.at(p);
                }
                ++metrics.blocks_completed;
                metrics.bits_notification_model +=
                    static_cast<std::uint64_t>(cfg.n) *
                    ideal_broadcast_cost(cfg.n, 1, cfg.broadcast_cost_factor);
                rec.adversary_deviated = deviated;
                if (deviated) ++metrics.misbehaving_generations;
                if (trace) {
                    trace->emit({{"type", "generation"},
                                 {"block", rec.block},
                                 {"attempt", rec.attempt},
                                 {"outcome", outcome_name(rec.outcome)},
                                 {"deviated", rec.adversary_deviated},
                                 {"deception", rec.deception}});
                }
                res.records.push_back(std::move(rec));
                break;
            }

            // ---- extended step: transcript broadcast and dispute analysis ----
            ++metrics.extended_steps;
            metrics.bits_extended_model +=
                static_cast<std::uint64_t>(cfg.n) *
                ideal_broadcast_cost(cfg.n, static_cast<std::uint64_t>(block_bits),
                                     cfg.broadcast_cost_factor);
            ctx.phase = StepTag::ExtendedBA;
            const std::size_t tb = transcript_bits(active.size(), block_bits, key_bits);
            std::vector<BroadcastInstance> claim_instances;
            for (NodeId i : active) {
                Transcript tr;
                tr.node = i;
                tr.claimed_flag = input_flag.at(i);
                tr.claimed_payload = payload.at(i);
                tr.claimed_sent = sent_digests[i];
                tr.claimed_received = recv_digests[i];
                if (adversary.controls(i)) {
                    Transcript forged =
                        normalize_claim(adversary.transcript_claim(ctx, i, tr), i, active,
                                        block_bits, key_bits, field_mask);
                    if (!(forged == tr)) deviated = true;
                    tr = std::move(forged);
                }
                claim_instances.push_back({i, i, encode_transcript(tr, active, block_bits, key_bits)});
            }
            BroadcastOutcome claim_out = run_broadcast_phase(
                net, StepTag::ExtendedBA, active, depth, claim_instances, tb, adversary, ctx);
            deviated = deviated || claim_out.adversary_deviated;
            std::map<NodeId, Transcript> agreed_claims;
            for (NodeId i : active) {
                agreed_claims[i] = decode_transcript(consensus_value(claim_out.agreed.at(i)), i,
                                                     active, block_bits, key_bits);
            }

            DisputeContext dctx{rec.agreed_flags, diss_edges, block_bits, key_bits};
            DisputeVerdict verdict = analyze_dispute(graph, agreed_claims, dctx);
            for (const auto& [a, b2] : verdict.new_f_edges) graph.mark_f(a, b2);
            for (NodeId x : verdict.self_contradictory) graph.isolate(x);
            std::vector<NodeId> fell = update_isolation(graph);
            std::vector<NodeId> all_new(verdict.self_contradictory.begin(),
                                        verdict.self_contradictory.end());
            all_new.insert(all_new.end(), fell.begin(), fell.end());
            if (verdict.new_f_edges.empty() && all_new.empty()) {
                throw std::logic_error("dispute analysis made no progress");
            }
            rec.verdict = std::move(verdict);
            rec.newly_isolated = all_new;
            rec.outcome = graph.isolated(0) ? GenerationOutcome::SourceIsolated
                                            : GenerationOutcome::DisputeEscalated;
            rec.adversary_deviated = deviated;
            if (deviated) ++metrics.misbehaving_generations;
            const bool source_gone = graph.isolated(0);
            if (trace) {
                nlohmann::json edges = nlohmann::json::array();
                for (const auto& [a, b2] : rec.verdict.new_f_edges) {
                    edges.push_back(nlohmann::json::array({a, b2}));
                }
                trace->emit({{"type", "generation"},
                             {"block", rec.block},
                             {"attempt", rec.attempt},
                             {"outcome", outcome_name(rec.outcome)},
                             {"deviated", rec.adversary_deviated},
                             {"new_f_edges", edges},
                             {"newly_isolated", all_new}});
            }
            res.records.push_back(std::move(rec));
            if (source_gone) {
                res.default_terminated = true;
                terminated = true;
                break;
            }
        }
    }

    for (NodeId p = 1; p < cfg.n; ++p) {
        BitVec out;
        for (std::uint64_t b = 0; b < total_blocks; ++b) out.append(decided[p][b]);
        out.resize(cfg.message_bits);
        res.outputs[p] = std::move(out);
    }
    {
        const BitVec* ref = adversary.controls(0) ? nullptr : &res.source_message;
        for (const auto& [p, out] : res.outputs) {
            if (adversary.controls(p)) continue;
            if (!ref) {
                ref = &out;
            } else if (*ref != out) {
                metrics.disagreement_events = 1;
                break;
            }
        }
    }
    res.final_graph = graph;
    res.metrics = metrics;
    if (trace) {
        trace->emit({{"type", "session_result"},
                     {"default_terminated", res.default_terminated},
                     {"blocks_completed", metrics.blocks_completed},
                     {"extended_steps", metrics.extended_steps},
                     {"deception_events", metrics.deception_events},
                     {"disagreement_events", metrics.disagreement_events}});
    }
    return res;
}

}  // namespace mvba
