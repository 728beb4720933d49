#include <gtest/gtest.h>

#include <random>

#include "medalchain/blind_vote.hpp"
#include "expect_code.hpp"
#include "world.hpp"

namespace mc = medalchain;
using namespace mc::vote;
using mc::testing::Voter;
using mc::testing::World;

namespace {

RsaKeyPair textbook() { return {3233, 17, 2753, 61, 53}; }

mc::Digest open(World& w, std::vector<const mc::identity::Credential*> voters, std::uint64_t quorum = kDefaultQuorum,
            Threshold t = {}, unsigned bits = 128) {
    RoundConfig cfg;
    cfg.subject_hash = mc::sha256("proposal");
    for (const auto* v : voters) cfg.eligible_voters.insert(v->address());
    cfg.quorum = quorum;
    cfg.threshold = t;
    return w.node.voting.open_round(cfg, w.gov, bits, 7);
}

}  // namespace

TEST(Rsa, TextbookKeyPassesChecker) {
    EXPECT_TRUE(check_key(textbook()));
    auto bad = textbook();
    bad.d += 1;
    EXPECT_FALSE(check_key(bad));
}

TEST(Rsa, KeygenFloor) {
    EXPECT_CODE((void)keygen(8, 1), KeyTooSmall);
    const auto k = keygen(16, 1);
    EXPECT_TRUE(check_key(k));
    EXPECT_EQ(mpz_sizeinbase(k.n.get_mpz_t(), 2), 16u);
}

TEST(Rsa, KeygenIsSeeded) {
    EXPECT_EQ(keygen(64, 5).n, keygen(64, 5).n);
    EXPECT_NE(keygen(64, 5).n, keygen(64, 6).n);
}

TEST(Rsa, Generated2048BitKeyRoundTrips) {
    const auto k = keygen(2048, 42);
    EXPECT_TRUE(check_key(k));
    EXPECT_EQ(mpz_sizeinbase(k.n.get_mpz_t(), 2), 2048u);
    gmp_randclass rng(gmp_randinit_mt);
    rng.seed(9);
    for (int i = 0; i < 20; ++i) {
        const BigInt m = rng.get_z_range(k.n);
        BigInt c, back;
        mpz_powm(c.get_mpz_t(), m.get_mpz_t(), k.e.get_mpz_t(), k.n.get_mpz_t());
        mpz_powm(back.get_mpz_t(), c.get_mpz_t(), k.d.get_mpz_t(), k.n.get_mpz_t());
        EXPECT_EQ(back, m);
    }
}

TEST(Blind, IdentityFactor) {
    const auto pk = textbook().public_key();
    EXPECT_EQ(blind(65, 1, pk), 65);
}

TEST(Blind, TextbookValue) {
    // 65 * 2^17 mod 3233, computed independently in tests/oracle/oracles.py
    EXPECT_EQ(blind(65, 2, textbook().public_key()), 725);
}

TEST(Blind, Preconditions) {
    const auto pk = textbook().public_key();
    EXPECT_CODE((void)blind(65, 61, pk), BadBlindingFactor);
    EXPECT_CODE((void)blind(65, 0, pk), BadBlindingFactor);
    EXPECT_CODE((void)blind(0, 2, pk), MessageOutOfRange);
    EXPECT_CODE((void)blind(3233, 2, pk), MessageOutOfRange);
}

TEST(Blind, UnblindingCancelsTheFactor) {
    const auto key = textbook();
    const auto pk = key.public_key();
    BigInt previous = -1;
    for (int r = 2; r < 60; ++r) {
        if (gcd(BigInt(r), pk.n) != 1) continue;
        const auto s = unblind(sign_blinded(blind(65, r, pk), key), r, pk);
        EXPECT_EQ(s, 588) << "r=" << r;  // 65^2753 mod 3233
        EXPECT_TRUE(verify_signature(65, s, pk));
        if (previous >= 0) EXPECT_EQ(s, previous);
        previous = s;
    }
}

TEST(Ballot, MessageMatchesReference) {
    Serial serial{};
    for (std::size_t i = 0; i < serial.size(); ++i) serial[i] = static_cast<std::uint8_t>(i);
    const auto rid = *mc::digest_from_hex(std::string(64, '5'));
    EXPECT_EQ(ballot_message(rid, serial, textbook().public_key()), 1470);
}

TEST(Threshold, ParsesRatiosAndDecimals) {
    EXPECT_EQ(Threshold::parse("0.6").num, 3u);
    EXPECT_EQ(Threshold::parse("0.6").den, 5u);
    EXPECT_EQ(Threshold::parse("2/3").str(), "2/3");
    EXPECT_TRUE(Threshold::parse("1").valid());
    EXPECT_CODE((void)Threshold::parse("1.5"), InvalidConfig);
    EXPECT_CODE((void)Threshold::parse("0"), InvalidConfig);
}

TEST(Threshold, PassRuleBoundaries) {
    const Threshold t{3, 5};
    EXPECT_TRUE(tally_passes(8, 12, 10, t));
    EXPECT_TRUE(tally_passes(6, 10, 10, t));
    EXPECT_FALSE(tally_passes(5, 9, 1, t));
    EXPECT_FALSE(tally_passes(9, 9, 10, t));
    EXPECT_FALSE(tally_passes(0, 0, 1, t));
}

TEST(Round, IssuanceRules) {
    World w;
    const auto rid = open(w, {&w.alice});
    EXPECT_NO_THROW((void)w.node.voting.request_token(rid, w.alice, 5));
    EXPECT_CODE((void)w.node.voting.request_token(rid, w.alice, 6), AlreadyIssued);
    EXPECT_CODE((void)w.node.voting.request_token(rid, w.bob, 6), NotEligible);
    EXPECT_CODE((void)w.node.voting.request_token(mc::sha256("x"), w.bob, 6), UnknownRound);
}

TEST(Round, CastAndDuplicate) {
    World w;
    std::mt19937_64 rng(3);
    const auto rid = open(w, {&w.alice, &w.bob});
    const auto before = w.node.ledger.event_count();
    BallotToken kept;
    const auto e = Voter::vote(w.node.voting, rid, w.alice, "approve", rng, &kept);
    EXPECT_EQ(w.node.ledger.event_count(), before + 1);
    EXPECT_EQ(e.kind, mc::ledger::EventKind::VoteCast);
    EXPECT_EQ(e.author, "anonymous");
    EXPECT_CODE((void)w.node.voting.cast_vote(rid, kept, "approve"), DuplicateSerial);
    EXPECT_CODE((void)w.node.voting.cast_vote(rid, kept, "maybe"), UnknownOption);
    auto forged = kept;
    forged.signature += 1;
    forged.serial[0] ^= 0xff;
    EXPECT_CODE((void)w.node.voting.cast_vote(rid, forged, "approve"), InvalidSignature);
    EXPECT_EQ(w.node.ledger.event_count(), before + 1);
}

TEST(Round, ForgeriesAt2048BitsAreRejected) {
    World w;
    const auto rid = open(w, {&w.alice}, 1, {}, 2048);
    const auto& pk = w.node.voting.find_round(rid)->registrar_key;
    gmp_randclass rng(gmp_randinit_mt);
    rng.seed(11);
    int accepted = 0;
    for (int i = 0; i < 100; ++i) {
        BallotToken b;
        for (auto& x : b.serial) x = static_cast<std::uint8_t>(mpz_class(rng.get_z_bits(8)).get_ui());
        b.signature = rng.get_z_range(pk.n);
        try {
            (void)w.node.voting.cast_vote(rid, b, "approve");
            ++accepted;
        } catch (const mc::Error& e) {
            EXPECT_EQ(e.code(), mc::ErrorCode::InvalidSignature);
        }
    }
    EXPECT_EQ(accepted, 0);
}

TEST(Round, EmptyRoundFailsQuorum) {
    World w;
    const auto rid = open(w, {&w.alice});
    const auto t = w.node.voting.close_and_tally(rid, w.gov);
    EXPECT_FALSE(t.passing);
    EXPECT_EQ(t.total, 0u);
    EXPECT_CODE((void)w.node.voting.close_and_tally(rid, w.gov), RoundClosed);
}

TEST(Round, TwelveVotersEightApprove) {
    World w;
    std::mt19937_64 rng(12);
    std::vector<mc::identity::Credential> voters;
    std::vector<const mc::identity::Credential*> ptrs;
    for (int i = 0; i < 12; ++i) voters.push_back(w.add("voter" + std::to_string(i), mc::identity::Role::User));
    for (const auto& v : voters) ptrs.push_back(&v);
    const auto rid = open(w, ptrs, 10, Threshold::parse("0.6"));
    for (int i = 0; i < 12; ++i) Voter::vote(w.node.voting, rid, voters[i], i < 8 ? "approve" : "reject", rng);
    const auto tally = w.node.voting.close_and_tally(rid, w.gov);
    EXPECT_TRUE(tally.passing);
    EXPECT_EQ(tally.counts.at("approve"), 8u);
    EXPECT_EQ(tally.total, 12u);
    w.node.flush();
    const auto recounted = recount(w.node.ledger.blocks(), rid);
    ASSERT_TRUE(recounted.has_value());
    EXPECT_EQ(*recounted, tally);
    EXPECT_EQ(*recorded_tally(w.node.ledger.blocks(), rid), tally);
    BallotToken dummy{};
    EXPECT_CODE((void)w.node.voting.cast_vote(rid, dummy, "approve"), RoundClosed);
}

TEST(Round, OnlyOpenerOrAuthorityCloses) {
    World w;
    const auto rid = open(w, {&w.alice});
    EXPECT_CODE((void)w.node.voting.close_and_tally(rid, w.plat), Unauthorized);
}

TEST(Round, RegistrarLogSharesNothingWithBallots) {
    World w;
    std::mt19937_64 rng(5);
    const auto rid = open(w, {&w.alice, &w.bob});
    const auto e = Voter::vote(w.node.voting, rid, w.alice, "approve", rng);
    const auto* log = w.node.voting.issuance_log(rid);
    ASSERT_NE(log, nullptr);
    ASSERT_EQ(log->size(), 1u);
    const auto record = log->begin()->second.to_value();
    for (const auto& [key, value] : record.as_map()) {
        EXPECT_EQ(e.payload.find(key), nullptr) << key;
        for (const auto& [k2, v2] : e.payload.as_map()) EXPECT_NE(mc::canonical_encode(value), mc::canonical_encode(v2));
    }
    EXPECT_EQ(e.payload.find("voter"), nullptr);
}
