#pragma once

// A node with a handful of registered actors and a hand-driven clock.

#include <random>
#include <string>

#include "medalchain/gateway/node.hpp"

namespace medalchain::testing {

using identity::Credential;
using identity::Role;

inline gateway::NodeConfig test_config(unsigned difficulty = 4) {
    gateway::NodeConfig c;
    c.difficulty = difficulty;
    c.vote_key_bits = 128;
    return c;
}

struct World {
    explicit World(unsigned difficulty = 4) : node(test_config(difficulty)) {
        node.set_time(1'700'000'000);
        gov = add("gov", Role::Authority);
        plat = add("plat", Role::Platform);
        other = add("other-plat", Role::Platform);
        alice = add("alice", Role::User);
        bob = add("bob", Role::User);
    }

    Credential add(const std::string& actor, Role role) {
        const auto key = sha256("key:" + actor);
        Credential c{actor, role, Bytes(key.begin(), key.end()), node.time()};
        node.directory.add(c);
        return c;
    }

    void tick(std::int64_t s = 1) { node.set_time(node.time() + s); }

    registry::BadgeMetadata metadata(const std::string& name = "Scholar") const {
        registry::BadgeMetadata m;
        m.name = name;
        m.icon = sha256("icon:" + name);
        m.description = "Awarded for exams";
        m.criteria = "pass two exams";
        m.grade_levels = {"silver", "gold"};
        return m;
    }

    Digest define(const std::string& name = "Scholar") { return node.registry.register_definition(metadata(name), plat); }

    registry::BadgeToken mint(const Digest& def, const Credential& holder, const std::string& grade = "gold") {
        tick();
        return node.registry.mint_token(def, holder.address(), grade, plat);
    }

    certification::ReviewRecord passing_review() const {
        certification::ReviewRecord r;
        r.compliance_ok = r.design_ok = r.platform_ok = r.security_ok = true;
        r.notes = {"lawful", "clear and fair", "records authentic", "no issues"};
        return r;
    }

    /// Files, reviews and approves a certification application for `def`.
    Digest approve(const Digest& def) {
        certification::ApplicationPayload p;
        p.definition_id = def;
        p.awarding_rules = "two exams";
        const auto app = node.certification.submit_application(plat, p);
        node.certification.begin_review(app, gov);
        node.certification.decide(app, certification::Decision::Approve, passing_review(), "", gov);
        return app;
    }

    gateway::Node node;
    Credential gov, plat, other, alice, bob;
};

/// Client side of the blind-signature protocol against a live round.
struct Voter {
    static ledger::LedgerEvent vote(vote::VotingService& svc, const Digest& round_id, const Credential& who,
                                    const std::string& option, std::mt19937_64& rng, vote::BallotToken* kept = nullptr) {
        const auto& pk = svc.find_round(round_id)->registrar_key;
        vote::BallotToken ballot;
        vote::BigInt m;
        do {
            for (auto& b : ballot.serial) b = static_cast<std::uint8_t>(rng());
            m = vote::ballot_message(round_id, ballot.serial, pk);
        } while (m == 0);
        vote::BigInt r;
        gmp_randclass g(gmp_randinit_default);
        g.seed(static_cast<unsigned long>(rng()));
        do r = g.get_z_range(pk.n);
        while (r <= 1 || gcd(r, pk.n) != 1);
        const auto blind_sig = svc.request_token(round_id, who, vote::blind(m, r, pk));
        ballot.signature = vote::unblind(blind_sig, r, pk);
        if (kept != nullptr) *kept = ballot;
        return svc.cast_vote(round_id, ballot, option);
    }
};

}  // namespace medalchain::testing
