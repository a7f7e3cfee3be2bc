#include "mvba/diagnosis.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mvba {

namespace {

std::pair<NodeId, NodeId> norm_edge(NodeId a, NodeId b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

DiagnosisGraph::DiagnosisGraph(int n, int t) : n_(n), t_(t) {
    if (n < 2) throw ConfigError("diagnosis graph needs at least 2 nodes");
    if (t < 0 || 3 * t >= n)
        throw ConfigError("fault budget must satisfy 0 <= 3t < n");
}

void DiagnosisGraph::check_node(NodeId a) const {
    if (a < 0 || a >= n_) throw std::out_of_range("node id out of range");
}

bool DiagnosisGraph::is_f(NodeId a, NodeId b) const {
    check_node(a);
    check_node(b);
    if (a == b) return false;
    return f_edges_.count(norm_edge(a, b)) > 0;
}

bool DiagnosisGraph::mark_f(NodeId a, NodeId b) {
    check_node(a);
    check_node(b);
    if (a == b) throw std::logic_error("cannot mark a self loop");
    return f_edges_.insert(norm_edge(a, b)).second;
}

void DiagnosisGraph::isolate(NodeId a) {
    check_node(a);
    isolated_.insert(a);
}

int DiagnosisGraph::accusation_count(NodeId a) const {
    check_node(a);
    int count = 0;
    for (const auto& [lo, hi] : f_edges_) {
        NodeId other;
        if (lo == a)
            other = hi;
        else if (hi == a)
            other = lo;
        else
            continue;
        if (!isolated(other)) ++count;
    }
    return count;
}

std::vector<NodeId> DiagnosisGraph::non_isolated() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < n_; ++i)
        if (!isolated(i)) out.push_back(i);
    return out;
}

nlohmann::json DiagnosisGraph::to_json() const {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : f_edges_) edges.push_back({a, b});
    return {{"n", n_},
            {"t", t_},
            {"f_edges", edges},
            {"isolated", std::vector<NodeId>(isolated_.begin(), isolated_.end())}};
}

std::vector<NodeId> update_isolation(DiagnosisGraph& graph) {
    std::vector<NodeId> newly;
    for (;;) {
        // Evaluate the threshold against the current state for every node at
        // once; sequential application would make the result depend on id
        // order because an isolation lowers other nodes' counts.
        std::vector<NodeId> over;
        for (NodeId a : graph.non_isolated())
            if (graph.accusation_count(a) > graph.t()) over.push_back(a);
        if (over.empty()) break;
        for (NodeId a : over) {
            graph.isolate(a);
            newly.push_back(a);
        }
    }
    return newly;
}

SpanningTree build_spanning_tree(const DiagnosisGraph& graph) {
    if (graph.isolated(0))
        throw SourceFaultyError("source is isolated; no dissemination tree exists");
    SpanningTree tree;
    tree.root = 0;
    std::set<NodeId> visited{0};
    std::vector<NodeId> frontier{0};
    tree.levels.push_back(frontier);
    while (!frontier.empty()) {
        std::vector<NodeId> next;
        for (NodeId u : frontier) {
            for (NodeId v : graph.non_isolated()) {
                if (visited.count(v) || !graph.is_g(u, v)) continue;
                visited.insert(v);
                tree.parent[v] = u;
                tree.children[u].push_back(v);
                next.push_back(v);
            }
        }
        if (next.empty()) break;
        std::sort(next.begin(), next.end());
        tree.levels.push_back(next);
        frontier = std::move(next);
    }
    for (NodeId v : graph.non_isolated())
        if (!visited.count(v))
            throw std::logic_error("non-isolated node unreachable over g-edges; "
                                   "diagnosis invariants were violated upstream");
    return tree;
}

bool check_two_hop_lemma(const DiagnosisGraph& graph) {
    std::vector<NodeId> active = graph.non_isolated();
    for (std::size_t a = 0; a < active.size(); ++a) {
        for (std::size_t b = a + 1; b < active.size(); ++b) {
            NodeId i = active[a], j = active[b];
            if (!graph.is_f(i, j)) continue;
            bool linked = false;
            for (NodeId p : active) {
                if (p == 0 || p == i || p == j) continue;  // peers only
                if (graph.is_g(i, p) && graph.is_g(j, p)) {
                    linked = true;
                    break;
                }
            }
            if (!linked) return false;
        }
    }
    return true;
}

std::size_t transcript_bits(std::size_t active_count, int block_bits, int key_bits) {
    if (active_count < 2) throw std::invalid_argument("transcript needs >= 2 active nodes");
    std::size_t peers = active_count - 1;
    return 1 + static_cast<std::size_t>(block_bits) +
           2 * peers * 2 * static_cast<std::size_t>(key_bits);
}

BitVec encode_transcript(const Transcript& t, const std::vector<NodeId>& active,
                         int block_bits, int key_bits) {
    BitVec out(transcript_bits(active.size(), block_bits, key_bits));
    std::size_t pos = 0;
    out.set_bit(pos++, t.claimed_flag);
    if (t.claimed_payload.size() != static_cast<std::size_t>(block_bits))
        throw std::invalid_argument("encode_transcript: payload width mismatch");
    for (std::size_t i = 0; i < t.claimed_payload.size(); ++i)
        out.set_bit(pos + i, t.claimed_payload.bit(i));
    pos += t.claimed_payload.size();
    auto put_digest = [&](const KeyedDigest& h) {
        for (int i = 0; i < key_bits; ++i)
            out.set_bit(pos + static_cast<std::size_t>(i), (h.key.value >> i) & 1u);
        pos += static_cast<std::size_t>(key_bits);
        for (int i = 0; i < key_bits; ++i)
            out.set_bit(pos + static_cast<std::size_t>(i), (h.digest.value >> i) & 1u);
        pos += static_cast<std::size_t>(key_bits);
    };
    for (const auto& map : {t.claimed_sent, t.claimed_received}) {
        for (NodeId peer : active) {
            if (peer == t.node) continue;
            auto it = map.find(peer);
            if (it == map.end())
                throw std::invalid_argument("encode_transcript: missing digest entry");
            put_digest(it->second);
        }
    }
    return out;
}

Transcript decode_transcript(const BitVec& bits, NodeId node,
                             const std::vector<NodeId>& active, int block_bits,
                             int key_bits) {
    if (bits.size() != transcript_bits(active.size(), block_bits, key_bits))
        throw std::invalid_argument("decode_transcript: wrong bit length");
    Transcript t;
    t.node = node;
    std::size_t pos = 0;
    t.claimed_flag = bits.bit(pos++);
    t.claimed_payload = bits.slice(pos, static_cast<std::size_t>(block_bits));
    pos += static_cast<std::size_t>(block_bits);
    auto take_digest = [&]() {
        std::uint32_t key = 0, digest = 0;
        for (int i = 0; i < key_bits; ++i)
            key |= std::uint32_t{bits.bit(pos + static_cast<std::size_t>(i))} << i;
        pos += static_cast<std::size_t>(key_bits);
        for (int i = 0; i < key_bits; ++i)
            digest |= std::uint32_t{bits.bit(pos + static_cast<std::size_t>(i))} << i;
        pos += static_cast<std::size_t>(key_bits);
        return KeyedDigest{FieldElement(key, key_bits), FieldElement(digest, key_bits)};
    };
    for (auto* map : {&t.claimed_sent, &t.claimed_received})
        for (NodeId peer : active)
            if (peer != node) (*map)[peer] = take_digest();
    return t;
}

namespace {

// A transcript that does not even have the prescribed shape cannot be
// compared against anything; its owner is treated as self-contradictory.
bool structurally_valid(const Transcript& t, NodeId node,
                        const std::vector<NodeId>& active, const DisputeContext& ctx) {
    if (t.node != node) return false;
    if (t.claimed_payload.size() != static_cast<std::size_t>(ctx.block_bits)) return false;
    auto covers = [&](const std::map<NodeId, KeyedDigest>& map) {
        std::size_t expected = 0;
        for (NodeId peer : active) {
            if (peer == node) continue;
            ++expected;
            auto it = map.find(peer);
            if (it == map.end()) return false;
            if (it->second.key.width != ctx.key_bits ||
                it->second.digest.width != ctx.key_bits)
                return false;
        }
        return map.size() == expected;
    };
    return covers(t.claimed_sent) && covers(t.claimed_received);
}

}  // namespace

DisputeVerdict analyze_dispute(const DiagnosisGraph& graph,
                               const std::map<NodeId, Transcript>& transcripts,
                               const DisputeContext& ctx) {
    DisputeVerdict verdict;
    std::vector<NodeId> active = graph.non_isolated();
    std::set<NodeId> comparable;

    for (NodeId x : active) {
        auto flag_it = ctx.agreed_flags.find(x);
        if (flag_it == ctx.agreed_flags.end())
            throw std::logic_error("agreed flag missing for active node");
        auto it = transcripts.find(x);
        if (it == transcripts.end() || !structurally_valid(it->second, x, active, ctx)) {
            verdict.self_contradictory.insert(x);
            continue;
        }
        comparable.insert(x);
        const Transcript& t = it->second;
        bool agreed_flag = flag_it->second;

        if (t.claimed_flag != agreed_flag) {
            verdict.self_contradictory.insert(x);
            continue;
        }
        // Sent digests must recompute from the payload the node claims.
        bool bad_sent = false;
        for (const auto& [recipient, h] : t.claimed_sent) {
            (void)recipient;
            if (!digest_matches(t.claimed_payload, h)) {
                bad_sent = true;
                break;
            }
        }
        if (bad_sent) {
            verdict.self_contradictory.insert(x);
            continue;
        }
        // The flag must agree with recomputation over the digests the node
        // was prescribed to check, i.e. those from current g-neighbors.
        bool mismatch = false;
        for (NodeId s : active) {
            if (s == x || !graph.is_g(s, x)) continue;
            if (!digest_matches(t.claimed_payload, t.claimed_received.at(s))) {
                mismatch = true;
                break;
            }
        }
        if (agreed_flag != mismatch) verdict.self_contradictory.insert(x);
    }

    auto consider_edge = [&](NodeId a, NodeId b) {
        if (graph.is_g(a, b)) {
            auto e = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
            verdict.new_f_edges.insert(e);
        }
    };

    // Payload relays: endpoints of each dissemination edge must agree on
    // the payload that travelled it.
    for (const auto& [sender, receiver] : ctx.dissemination_edges) {
        if (!comparable.count(sender) || !comparable.count(receiver)) continue;
        if (transcripts.at(sender).claimed_payload != transcripts.at(receiver).claimed_payload)
            consider_edge(sender, receiver);
    }
    // Digest exchange: every ordered active pair exchanged one keyed digest.
    for (NodeId s : active) {
        if (!comparable.count(s)) continue;
        for (NodeId r : active) {
            if (r == s || !comparable.count(r)) continue;
            const auto& sent = transcripts.at(s).claimed_sent.at(r);
            const auto& received = transcripts.at(r).claimed_received.at(s);
            if (!(sent == received)) consider_edge(s, r);
        }
    }
    return verdict;
}

}  // namespace mvba
