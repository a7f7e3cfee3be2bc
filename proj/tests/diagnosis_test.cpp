#include <doctest.h>

#include <map>
#include <stdexcept>
#include <vector>

#include "mvba/diagnosis.hpp"
#include "mvba/rng.hpp"

using mvba::BitVec;
using mvba::DiagnosisGraph;
using mvba::DisputeContext;
using mvba::DisputeVerdict;
using mvba::FieldElement;
using mvba::KeyedDigest;
using mvba::NodeId;
using mvba::Transcript;

namespace {

constexpr int kD = 8;  // payload width used by the dispute scenarios
constexpr int kK = 4;  // key width

// Deterministic nonzero key per ordered pair (checked nonzero below, so a
// one-bit payload difference always changes the digest: its difference
// polynomial is b*K, whose only root is K = 0).
FieldElement key_for(NodeId i, NodeId j) {
    auto v = static_cast<std::uint32_t>(7 * i + 3 * j + 1) & 0xFu;
    REQUIRE(v != 0);
    return FieldElement(v, kK);
}

KeyedDigest digest_of(const BitVec& payload, FieldElement key) {
    return {key, mvba::keyed_hash(payload, key)};
}

// Transcripts of nodes that sent digests of their own payload and report
// received digests equal to the sender's sent claim (true when both ends
// are honest; tests override the lying pairs afterwards).
std::map<NodeId, Transcript> truthful_transcripts(const DiagnosisGraph& graph,
                                                  const std::map<NodeId, BitVec>& payload) {
    std::map<NodeId, Transcript> out;
    auto active = graph.non_isolated();
    for (NodeId i : active) {
        Transcript t;
        t.node = i;
        t.claimed_payload = payload.at(i);
        for (NodeId j : active)
            if (j != i) t.claimed_sent[j] = digest_of(payload.at(i), key_for(i, j));
        out[i] = t;
    }
    for (NodeId i : active)
        for (NodeId j : active)
            if (j != i) out[i].claimed_received[j] = out[j].claimed_sent.at(i);
    return out;
}

// Flag each node would compute from its (possibly overridden) transcript:
// any mismatch among digests received from current g-neighbors.
std::map<NodeId, bool> recomputed_flags(const DiagnosisGraph& graph,
                                        std::map<NodeId, Transcript>& transcripts) {
    std::map<NodeId, bool> flags;
    for (auto& [i, t] : transcripts) {
        bool flag = false;
        for (const auto& [s, h] : t.claimed_received) {
            if (!graph.is_g(s, i) || graph.isolated(s)) continue;
            if (!mvba::digest_matches(t.claimed_payload, h)) flag = true;
        }
        t.claimed_flag = flag;
        flags[i] = flag;
    }
    return flags;
}

std::vector<std::pair<NodeId, NodeId>> star_edges(int n) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId r = 1; r < n; ++r) edges.emplace_back(0, r);
    return edges;
}

}  // namespace

TEST_SUITE("diagnosis") {

TEST_CASE("graph construction enforces 0 <= 3t < n") {
    CHECK_THROWS_AS(DiagnosisGraph(1, 0), mvba::ConfigError);
    CHECK_THROWS_AS(DiagnosisGraph(3, 1), mvba::ConfigError);
    CHECK_THROWS_AS(DiagnosisGraph(4, -1), mvba::ConfigError);
    CHECK_NOTHROW(DiagnosisGraph(4, 1));
    CHECK_NOTHROW(DiagnosisGraph(2, 0));
}

TEST_CASE("edges start g and move to f exactly once") {
    DiagnosisGraph g(4, 1);
    CHECK(g.is_g(0, 1));
    CHECK_FALSE(g.is_f(0, 1));
    CHECK_FALSE(g.is_g(2, 2));  // no self edges

    CHECK(g.mark_f(1, 0));
    CHECK_FALSE(g.mark_f(0, 1));  // already f, either orientation
    CHECK(g.is_f(0, 1));
    CHECK(g.is_f(1, 0));
    CHECK_FALSE(g.is_g(0, 1));
    CHECK(g.f_edges().count({0, 1}) == 1);  // stored normalized

    CHECK_THROWS_AS(g.mark_f(2, 2), std::logic_error);
    CHECK_THROWS_AS(g.is_f(0, 4), std::out_of_range);
    CHECK_THROWS_AS(g.mark_f(-1, 0), std::out_of_range);
}

TEST_CASE("accusations count only non-isolated accusers") {
    DiagnosisGraph g(7, 2);
    g.mark_f(3, 0);
    g.mark_f(3, 1);
    g.mark_f(3, 2);
    CHECK(g.accusation_count(3) == 3);
    CHECK(g.accusation_count(0) == 1);
    g.isolate(1);
    CHECK(g.accusation_count(3) == 2);
    CHECK(g.isolated(1));
    CHECK(g.non_isolated() == std::vector<NodeId>{0, 2, 3, 4, 5, 6});
}

TEST_CASE("isolation threshold requires strictly more than t accusations") {
    DiagnosisGraph g(4, 1);
    g.mark_f(1, 2);
    CHECK(mvba::update_isolation(g).empty());  // one accusation each, t = 1

    g.mark_f(1, 3);
    auto fell = mvba::update_isolation(g);
    CHECK(fell == std::vector<NodeId>{1});
    CHECK(g.isolated(1));
    // The isolated accuser no longer counts against its neighbors.
    CHECK(g.accusation_count(2) == 0);
    CHECK(g.accusation_count(3) == 0);
}

TEST_CASE("nodes crossing the threshold together fall together") {
    DiagnosisGraph g(7, 1);
    g.mark_f(1, 2);
    g.mark_f(1, 3);
    g.mark_f(2, 4);
    auto fell = mvba::update_isolation(g);
    CHECK(fell == std::vector<NodeId>{1, 2});
    CHECK(g.accusation_count(3) == 0);
    CHECK(g.accusation_count(4) == 0);
}

TEST_CASE("spanning tree is the direct star while the graph is clean") {
    DiagnosisGraph g(4, 1);
    auto tree = mvba::build_spanning_tree(g);
    CHECK(tree.root == 0);
    CHECK(tree.levels == std::vector<std::vector<NodeId>>{{0}, {1, 2, 3}});
    CHECK(tree.parent == std::map<NodeId, NodeId>{{1, 0}, {2, 0}, {3, 0}});
    CHECK(tree.children.at(0) == std::vector<NodeId>{1, 2, 3});
}

TEST_CASE("spanning tree routes around f-edges through the lowest relay") {
    DiagnosisGraph g(4, 1);
    g.mark_f(0, 1);
    auto tree = mvba::build_spanning_tree(g);
    CHECK(tree.levels == std::vector<std::vector<NodeId>>{{0}, {2, 3}, {1}});
    CHECK(tree.parent.at(1) == 2);
    CHECK(tree.parent.at(2) == 0);
    CHECK(tree.parent.at(3) == 0);
}

TEST_CASE("spanning tree skips isolated nodes entirely") {
    DiagnosisGraph g(4, 1);
    g.mark_f(0, 1);
    g.isolate(2);
    auto tree = mvba::build_spanning_tree(g);
    CHECK(tree.levels == std::vector<std::vector<NodeId>>{{0}, {3}, {1}});
    CHECK(tree.parent.at(3) == 0);
    CHECK(tree.parent.at(1) == 3);
    CHECK(tree.parent.count(2) == 0);
}

TEST_CASE("spanning tree fails loudly when the source is gone or cut off") {
    DiagnosisGraph g(4, 1);
    g.isolate(0);
    CHECK_THROWS_AS(mvba::build_spanning_tree(g), mvba::SourceFaultyError);

    DiagnosisGraph cut(4, 1);
    cut.mark_f(0, 3);
    cut.mark_f(1, 3);
    cut.mark_f(2, 3);  // 3 is non-isolated yet unreachable
    CHECK_THROWS_AS(mvba::build_spanning_tree(cut), std::logic_error);
}

TEST_CASE("two hop lemma needs a common peer that is not the source") {
    DiagnosisGraph g(4, 1);
    CHECK(mvba::check_two_hop_lemma(g));  // vacuous without f-edges
    g.mark_f(2, 3);
    CHECK(mvba::check_two_hop_lemma(g));  // node 1 links the pair
    g.mark_f(1, 2);
    // Only the source is g to both 2 and 3 now, which does not count.
    CHECK_FALSE(mvba::check_two_hop_lemma(g));
}

TEST_CASE("two hop lemma ignores isolated pairs and isolated intermediates") {
    DiagnosisGraph g(5, 1);
    g.mark_f(1, 2);
    CHECK(mvba::check_two_hop_lemma(g));  // 3 and 4 both qualify
    g.isolate(3);
    CHECK(mvba::check_two_hop_lemma(g));  // 4 still does
    g.isolate(4);
    CHECK_FALSE(mvba::check_two_hop_lemma(g));
    g.isolate(1);  // accuser gone: the pair no longer needs a link
    CHECK(mvba::check_two_hop_lemma(g));
}

TEST_CASE("transcript wire size counts flag, payload and digest pairs") {
    // 1 + D + 2 * (active - 1) * 2k
    CHECK(mvba::transcript_bits(4, 8, 4) == 1 + 8 + 2 * 3 * 8);
    CHECK(mvba::transcript_bits(2, 16, 8) == 1 + 16 + 2 * 1 * 16);
    CHECK_THROWS_AS(mvba::transcript_bits(1, 8, 4), std::invalid_argument);
}

TEST_CASE("transcript encoding round trips through the wire layout") {
    std::vector<NodeId> active{0, 1, 3};
    mvba::RngStream rng(77);
    Transcript t;
    t.node = 1;
    t.claimed_flag = true;
    t.claimed_payload = rng.bits(kD);
    for (NodeId peer : {0, 3}) {
        t.claimed_sent[peer] = {FieldElement(static_cast<std::uint32_t>(rng.below(16)), kK),
                                FieldElement(static_cast<std::uint32_t>(rng.below(16)), kK)};
        t.claimed_received[peer] = {FieldElement(static_cast<std::uint32_t>(rng.below(16)), kK),
                                    FieldElement(static_cast<std::uint32_t>(rng.below(16)), kK)};
    }
    BitVec wire = mvba::encode_transcript(t, active, kD, kK);
    CHECK(wire.size() == mvba::transcript_bits(3, kD, kK));
    CHECK(mvba::decode_transcript(wire, 1, active, kD, kK) == t);

    CHECK_THROWS_AS(mvba::decode_transcript(BitVec(wire.size() + 1), 1, active, kD, kK),
                    std::invalid_argument);
    Transcript incomplete = t;
    incomplete.claimed_sent.erase(3);
    CHECK_THROWS_AS(mvba::encode_transcript(incomplete, active, kD, kK),
                    std::invalid_argument);
    Transcript misshaped = t;
    misshaped.claimed_payload = BitVec(kD + 1);
    CHECK_THROWS_AS(mvba::encode_transcript(misshaped, active, kD, kK),
                    std::invalid_argument);
}

TEST_CASE("consistent claims yield an empty verdict") {
    DiagnosisGraph g(4, 1);
    std::map<NodeId, BitVec> payload;
    for (NodeId i = 0; i < 4; ++i) payload[i] = BitVec::from_u64(0x5A, kD);
    auto tr = truthful_transcripts(g, payload);
    DisputeContext ctx{recomputed_flags(g, tr), star_edges(4), kD, kK};
    CHECK(mvba::analyze_dispute(g, tr, ctx).empty());
}

TEST_CASE("source equivocation costs exactly the edge to the altered recipient") {
    DiagnosisGraph g(4, 1);
    BitVec m = BitVec::from_u64(0x5A, kD);
    BitVec altered = m;
    altered.flip_bit(0);
    std::map<NodeId, BitVec> payload{{0, m}, {1, altered}, {2, m}, {3, m}};
    auto tr = truthful_transcripts(g, payload);

    // On the wire the source matched each recipient's copy; in its claims it
    // sticks to the true payload everywhere and recomputes both directions.
    tr[1].claimed_received[0] = digest_of(altered, key_for(0, 1));
    tr[0].claimed_received[1] = digest_of(m, key_for(1, 0));

    auto flags = recomputed_flags(g, tr);
    CHECK_FALSE(flags.at(0));  // the source claims nothing was wrong
    CHECK(flags.at(1));
    CHECK(flags.at(2));
    CHECK(flags.at(3));

    DisputeContext ctx{flags, star_edges(4), kD, kK};
    DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
    CHECK(v.self_contradictory.empty());
    CHECK(v.new_f_edges == std::set<std::pair<NodeId, NodeId>>{{0, 1}});
}

TEST_CASE("a flag differing from the agreed vector is self-contradiction") {
    DiagnosisGraph g(4, 1);
    std::map<NodeId, BitVec> payload;
    for (NodeId i = 0; i < 4; ++i) payload[i] = BitVec::from_u64(0xC3, kD);
    auto tr = truthful_transcripts(g, payload);
    auto flags = recomputed_flags(g, tr);
    tr[2].claimed_flag = true;  // broadcast said false, claim says true

    DisputeContext ctx{flags, star_edges(4), kD, kK};
    DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
    CHECK(v.self_contradictory == std::set<NodeId>{2});
    CHECK(v.new_f_edges.empty());
}

TEST_CASE("a sent digest that does not recompute is self-contradiction") {
    DiagnosisGraph g(4, 1);
    std::map<NodeId, BitVec> payload;
    for (NodeId i = 0; i < 4; ++i) payload[i] = BitVec::from_u64(0x77, kD);
    auto tr = truthful_transcripts(g, payload);
    auto flags = recomputed_flags(g, tr);
    tr[3].claimed_sent[1].digest.value ^= 1u;

    DisputeContext ctx{flags, star_edges(4), kD, kK};
    DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
    CHECK(v.self_contradictory == std::set<NodeId>{3});
    // The altered claim also disagrees with the recipient's received claim.
    CHECK(v.new_f_edges == std::set<std::pair<NodeId, NodeId>>{{1, 3}});
}

TEST_CASE("a raised flag with every check passing is self-contradiction") {
    DiagnosisGraph g(4, 1);
    std::map<NodeId, BitVec> payload;
    for (NodeId i = 0; i < 4; ++i) payload[i] = BitVec::from_u64(0x11, kD);
    auto tr = truthful_transcripts(g, payload);
    auto flags = recomputed_flags(g, tr);
    tr[1].claimed_flag = true;
    flags[1] = true;  // the broadcast delivered the raised flag

    DisputeContext ctx{flags, star_edges(4), kD, kK};
    DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
    CHECK(v.self_contradictory == std::set<NodeId>{1});
    CHECK(v.new_f_edges.empty());
}

TEST_CASE("a clear flag with a failing check is self-contradiction") {
    DiagnosisGraph g(4, 1);
    std::map<NodeId, BitVec> payload;
    for (NodeId i = 0; i < 4; ++i) payload[i] = BitVec::from_u64(0x2E, kD);
    auto tr = truthful_transcripts(g, payload);
    auto flags = recomputed_flags(g, tr);
    tr[2].claimed_received[3].digest.value ^= 1u;  // mismatch, yet flag stays clear

    DisputeContext ctx{flags, star_edges(4), kD, kK};
    DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
    CHECK(v.self_contradictory == std::set<NodeId>{2});
    // The doctored received claim also contradicts the sender's sent claim.
    CHECK(v.new_f_edges == std::set<std::pair<NodeId, NodeId>>{{2, 3}});
}

TEST_CASE("flag recomputation is scoped to current g-neighbors") {
    DiagnosisGraph g(4, 1);
    g.mark_f(2, 3);
    std::map<NodeId, BitVec> payload;
    for (NodeId i = 0; i < 4; ++i) payload[i] = BitVec::from_u64(0x4D, kD);
    auto tr = truthful_transcripts(g, payload);
    // A mismatching digest across an edge that is already f: outside the
    // prescribed check set, so a clear flag stays consistent, and the cross
    // rule has no g-edge left to take.
    tr[2].claimed_received[3].digest.value ^= 1u;
    auto flags = recomputed_flags(g, tr);
    CHECK_FALSE(flags.at(2));

    DisputeContext ctx{flags, star_edges(4), kD, kK};
    CHECK(mvba::analyze_dispute(g, tr, ctx).empty());
}

TEST_CASE("missing or malformed transcripts convict their owners") {
    DiagnosisGraph g(4, 1);
    std::map<NodeId, BitVec> payload;
    for (NodeId i = 0; i < 4; ++i) payload[i] = BitVec::from_u64(0x99, kD);
    auto base = truthful_transcripts(g, payload);
    std::map<NodeId, Transcript> tr = base;
    auto flags = recomputed_flags(g, tr);
    DisputeContext ctx{flags, star_edges(4), kD, kK};

    SUBCASE("absent transcript") {
        tr.erase(3);
        DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
        CHECK(v.self_contradictory == std::set<NodeId>{3});
        CHECK(v.new_f_edges.empty());
    }
    SUBCASE("wrong payload width") {
        tr[3].claimed_payload = BitVec(kD + 4);
        DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
        CHECK(v.self_contradictory == std::set<NodeId>{3});
        CHECK(v.new_f_edges.empty());
    }
    SUBCASE("digest entry for a nonexistent peer") {
        tr[3].claimed_sent[7] = tr[3].claimed_sent.at(0);
        DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
        CHECK(v.self_contradictory == std::set<NodeId>{3});
    }
    SUBCASE("missing digest entry") {
        tr[3].claimed_received.erase(0);
        DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
        CHECK(v.self_contradictory == std::set<NodeId>{3});
    }
}

TEST_CASE("an interior relay corrupting a forward loses the tree edge") {
    DiagnosisGraph g(4, 1);
    BitVec m = BitVec::from_u64(0x5A, kD);
    BitVec corrupted = m;
    corrupted.flip_bit(0);
    // Tree dissemination 0 -> 1 -> 2 and 0 -> 3; node 1 corrupted the copy
    // it forwarded to 2 but claims the payload it received.
    std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}, {0, 3}, {1, 2}};
    std::map<NodeId, BitVec> payload{{0, m}, {1, m}, {2, corrupted}, {3, m}};
    auto tr = truthful_transcripts(g, payload);
    auto flags = recomputed_flags(g, tr);
    CHECK(flags.at(1));  // 2's digest of its differing copy reaches 1
    CHECK(flags.at(2));

    DisputeContext ctx{flags, edges, kD, kK};
    DisputeVerdict v = mvba::analyze_dispute(g, tr, ctx);
    CHECK(v.self_contradictory.empty());
    CHECK(v.new_f_edges == std::set<std::pair<NodeId, NodeId>>{{1, 2}});
}

TEST_CASE("honest claims never trip any rule under random graphs and keys") {
    mvba::RngStream rng(0xD15);
    for (int rep = 0; rep < 100; ++rep) {
        int n = 4 + static_cast<int>(rng.below(4));
        int t = (n - 1) / 3;
        DiagnosisGraph g(n, t);
        // Sprinkle f-edges and isolations that keep everyone else connected.
        for (int e = 0; e < t; ++e) {
            auto a = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
            auto b = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
            if (a != b) g.mark_f(a, b);
        }
        if (t > 1 && rng.coin()) g.isolate(static_cast<NodeId>(1 + rng.below(n - 1)));

        BitVec m = rng.bits(kD);
        std::map<NodeId, BitVec> payload;
        auto active = g.non_isolated();
        for (NodeId i : active) payload[i] = m;

        // Truthful transcripts with random keys this time.
        std::map<NodeId, Transcript> tr;
        for (NodeId i : active) {
            Transcript t1;
            t1.node = i;
            t1.claimed_payload = m;
            for (NodeId j : active) {
                if (j == i) continue;
                FieldElement key(static_cast<std::uint32_t>(rng.below(16)), kK);
                t1.claimed_sent[j] = digest_of(m, key);
            }
            tr[i] = t1;
        }
        for (NodeId i : active)
            for (NodeId j : active)
                if (j != i) tr[i].claimed_received[j] = tr[j].claimed_sent.at(i);

        auto flags = recomputed_flags(g, tr);
        for (const auto& [node, raised] : flags) {
            (void)node;
            CHECK_FALSE(raised);
        }
        DisputeContext ctx{flags, star_edges(n), kD, kK};
        CHECK(mvba::analyze_dispute(g, tr, ctx).empty());
    }
}

TEST_CASE("graph serialization carries edges and isolation") {
    DiagnosisGraph g(4, 1);
    g.mark_f(2, 0);
    g.isolate(3);
    auto j = g.to_json();
    CHECK(j["n"] == 4);
    CHECK(j["t"] == 1);
    CHECK(j["f_edges"].size() == 1);
    CHECK(j["f_edges"][0][0] == 0);
    CHECK(j["f_edges"][0][1] == 2);
    CHECK(j["isolated"] == std::vector<NodeId>{3});
}

}  // TEST_SUITE
