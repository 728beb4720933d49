#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "medalchain/cli.hpp"
#include "medalchain/gateway/journal.hpp"
#include "chains.hpp"
#include "gateway_fixture.hpp"
#include "world.hpp"

namespace mc = medalchain;
using mc::Digest;
using mc::Value;
using mc::ledger::EventKind;
using mc::registry::TokenAction;
using mc::registry::TokenStatus;
using mc::testing::World;

namespace {

std::vector<mc::ledger::LedgerEvent> all_events(const World& w) {
    std::vector<mc::ledger::LedgerEvent> out;
    w.node.ledger.for_each_event([&](const mc::ledger::LedgerEvent& e) { out.push_back(e); });
    return out;
}

template <typename Fn>
bool throws_domain_error(Fn&& fn) {
    try {
        fn();
        return false;
    } catch (const mc::Error&) {
        return true;
    }
}

Value random_value(std::mt19937_64& rng, int depth) {
    switch (depth > 2 ? rng() % 4 : rng() % 6) {
        case 0: return static_cast<std::int64_t>(rng() % 2000) - 1000;
        case 1: return "s" + std::to_string(rng() % 50);
        case 2: return rng() % 2 == 0;
        case 3: return Value(mc::sha256(std::to_string(rng())));
        case 4: {
            Value::List l;
            for (std::size_t i = 0, n = rng() % 4; i < n; ++i) l.push_back(random_value(rng, depth + 1));
            return l;
        }
        default: {
            Value::Map m;
            for (std::size_t i = 0, n = rng() % 5; i < n; ++i) m["k" + std::to_string(rng() % 9)] = random_value(rng, depth + 1);
            return m;
        }
    }
}

}  // namespace

// --- ledger ---------------------------------------------------------------

TEST(LedgerProperty, MerkleMatchesReferenceForAllSmallSizes) {
    for (std::size_t n = 0; n <= 16; ++n) {
        const auto leaves = mc::testing::leaf_set(n);
        EXPECT_EQ(mc::ledger::merkle_root(leaves), mc::testing::reference_root(leaves)) << n;
        for (std::size_t i = 0; i < n; ++i) {
            const auto proof = mc::ledger::merkle_prove(leaves, i);
            EXPECT_EQ(proof.siblings, mc::testing::reference_path(leaves, i));
            EXPECT_TRUE(mc::ledger::verify_proof(leaves[i], proof, mc::ledger::merkle_root(leaves)));
            for (std::size_t s = 0; s < proof.siblings.size(); ++s) {
                auto bad = proof;
                bad.siblings[s].hash[0] ^= 1;
                EXPECT_FALSE(mc::ledger::verify_proof(leaves[i], bad, mc::ledger::merkle_root(leaves)));
            }
        }
    }
}

TEST(LedgerProperty, EveryBitFlipOfAnExportIsRejected) {
    const auto chain = mc::testing::three_block_chain();
    const auto text = mc::ledger::export_text(chain);
    ASSERT_FALSE(mc::testing::export_rejected(text));
    std::size_t missed = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        for (int bit : {0, 5}) {
            auto bad = text;
            bad[i] = static_cast<char>(bad[i] ^ (1 << bit));
            if (!mc::testing::export_rejected(bad)) ++missed;
        }
    }
    EXPECT_EQ(missed, 0u);
}

TEST(LedgerProperty, CanonicalEncodingIgnoresInsertionOrder) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 300; ++i) {
        const Value v = random_value(rng, 0);
        const auto text = mc::canonical_encode(v);
        EXPECT_EQ(mc::canonical_encode(mc::parse_canonical(text)), text);
        if (v.is_map()) {
            std::vector<std::pair<std::string, Value>> items(v.as_map().begin(), v.as_map().end());
            std::shuffle(items.begin(), items.end(), rng);
            Value::Map rebuilt;
            for (auto& [k, x] : items) rebuilt.emplace(k, x);
            EXPECT_EQ(mc::canonical_encode(Value(rebuilt)), text);
        }
    }
}

TEST(LedgerProperty, MiningIsSoundAndDeterministic) {
    auto chain = mc::testing::three_block_chain(6);
    for (std::size_t h = 1; h < chain.size(); ++h) {
        EXPECT_GE(mc::leading_zero_bits(chain[h].hash), 6u);
        const auto again = mc::ledger::mine_block(chain[h - 1].header, chain[h].events, 6, chain[h].header.timestamp);
        EXPECT_EQ(again.encode(), chain[h].encode());
    }
}

// --- registry -------------------------------------------------------------

TEST(RegistryProperty, DuplicateAwardFiresExactlyWhenATokenIsLive) {
    // every sequence of three operations over 3 holders x 2 grades, where an
    // operation either mints or revokes the live token of one pair
    const std::vector<std::string> grades{"silver", "gold"};
    for (int seq = 0; seq < 12 * 12 * 12; ++seq) {
        World w;
        const auto def = w.define();
        const std::array<const mc::identity::Credential*, 3> holders{&w.alice, &w.bob, &w.other};
        std::map<int, Digest> live;
        for (int step = 0, code = seq; step < 3; ++step, code /= 12) {
            const int op = code % 12, pair = op % 6;
            const auto& holder = *holders[pair / 2];
            const auto& grade = grades[pair % 2];
            if (op < 6) {
                const bool expect_dup = live.count(pair) == 1;
                try {
                    live[pair] = w.mint(def, holder, grade).token_id;
                    EXPECT_FALSE(expect_dup) << seq;
                } catch (const mc::Error& e) {
                    EXPECT_TRUE(expect_dup) << seq;
                    EXPECT_EQ(e.code(), mc::ErrorCode::DuplicateAward);
                }
            } else if (live.count(pair)) {
                w.node.registry.revoke_token(live[pair], w.gov);
                live.erase(pair);
            }
        }
        std::set<std::tuple<Digest, Digest, std::string>> seen;
        for (const auto& [id, t] : w.node.registry.tokens())
            if (t.live()) EXPECT_TRUE(seen.insert({t.definition_id, t.holder, t.grade}).second);
    }
}

TEST(RegistryProperty, StatusRandomWalkStaysOnTheTable) {
    World w;
    const auto def = w.define();
    std::vector<Digest> tokens;
    for (int i = 0; i < 6; ++i) {
        const auto who = w.add("walker" + std::to_string(i), mc::identity::Role::User);
        tokens.push_back(w.mint(def, who).token_id);
    }
    const auto app = w.approve(def);
    std::mt19937_64 rng(21);
    for (int i = 0; i < 10'000; ++i) {
        const auto& id = tokens[rng() % tokens.size()];
        const auto before = w.node.registry.find_token(id)->status;
        const auto action = static_cast<TokenAction>(rng() % 4);
        const auto digest = w.node.state_digest();
        bool rejected = false;
        try {
            switch (action) {
                case TokenAction::Certify: w.node.registry.certify_token(id, app, "official", w.gov); break;
                case TokenAction::Freeze: w.node.registry.freeze_token(id, w.gov); break;
                case TokenAction::Restore: w.node.registry.restore_token(id, w.gov); break;
                case TokenAction::Revoke: w.node.registry.revoke_token(id, w.gov); break;
            }
        } catch (const mc::Error& e) {
            rejected = true;
            EXPECT_EQ(e.code(), mc::ErrorCode::IllegalTransition);
        }
        const auto after = w.node.registry.find_token(id)->status;
        const auto legal = mc::registry::next_status(before, action);
        if (rejected) {
            EXPECT_FALSE(legal);
            EXPECT_EQ(after, before);
            EXPECT_EQ(w.node.state_digest(), digest);
        } else {
            ASSERT_TRUE(legal);
            EXPECT_EQ(after, *legal);
        }
    }
}

TEST(RegistryProperty, HundredTokensAllVerify) {
    World w(2);
    const auto def = w.define();
    std::vector<Digest> tokens;
    for (int i = 0; i < 100; ++i) {
        const auto who = w.add("holder" + std::to_string(i), mc::identity::Role::User);
        tokens.push_back(w.mint(def, who, i % 2 ? "gold" : "silver").token_id);
        if (i % 7 == 0) w.node.flush();
    }
    w.node.flush();
    for (const auto& t : tokens) {
        const auto report = w.node.registry.verify_token(t);
        ASSERT_TRUE(report.exists);
        EXPECT_FALSE(report.history.empty());
        for (const auto& cited : report.history)
            EXPECT_TRUE(mc::ledger::verify_proof(cited.event.id, cited.proof, cited.block_root));
        EXPECT_TRUE(report.all_proofs_ok());
    }
}

// --- contracts ------------------------------------------------------------

TEST(ContractProperty, WindowlessEligibilityIsMonotoneAndPure) {
    World w;
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        mc::contracts::RuleContract c;
        for (std::size_t i = 0, n = 1 + rng() % 3; i < n; ++i)
            c.conditions.push_back({std::string(1, static_cast<char>('a' + rng() % 3)), 1 + rng() % 4, {}});
        std::vector<mc::contracts::ActivityEvent> log;
        bool was = mc::contracts::evaluate(c, log, 0);
        for (int k = 0; k < 20; ++k) {
            log.push_back({w.alice.address(), std::string(1, static_cast<char>('a' + rng() % 3)), "plat", k, Value::Map{}});
            const bool now = mc::contracts::evaluate(c, log, 100);
            EXPECT_TRUE(!was || now) << "trial " << trial;
            EXPECT_EQ(mc::contracts::evaluate(c, log, 100), now);
            was = now;
        }
    }
}

TEST(ContractProperty, EveryRuleUpdateIsBoundToItsVote) {
    World w;
    std::mt19937_64 rng(2);
    const auto def = w.define();
    const auto cid = w.node.contracts.create_contract(def, "gold", {{"exam", 1, {}}}, w.plat);
    for (std::uint64_t v = 1; v <= 4; ++v) {
        const std::vector<mc::contracts::Condition> next{{"exam", v + 1, {}}};
        const auto voter = w.add("v" + std::to_string(v), mc::identity::Role::User);
        mc::vote::RoundConfig cfg;
        cfg.subject_hash = mc::contracts::rule_change_subject(cid, v, next);
        cfg.eligible_voters = {voter.address()};
        cfg.quorum = 1;
        const auto rid = w.node.voting.open_round(cfg, w.gov, 128, v);
        mc::testing::Voter::vote(w.node.voting, rid, voter, "approve", rng);
        const auto tally = w.node.voting.close_and_tally(rid, w.gov);
        EXPECT_EQ(w.node.contracts.update_rules(cid, v, next, tally, w.plat).version, v + 1);
    }
    w.node.flush();
    std::map<Digest, Digest> closed_subject;
    std::size_t updates = 0;
    for (const auto& e : all_events(w)) {
        if (e.kind == EventKind::VoteRoundClosed)
            closed_subject[e.payload.at("round_id").as_digest()] = e.payload.at("subject_hash").as_digest();
        if (e.kind != EventKind::RuleUpdated) continue;
        ++updates;
        const auto rid = e.payload.at("round_id").as_digest();
        ASSERT_TRUE(closed_subject.count(rid));
        const auto expected = mc::contracts::rule_change_subject(
            e.payload.at("contract_id").as_digest(), e.payload.at("old_version").as_uint(),
            mc::contracts::conditions_from(e.payload.at("conditions")));
        EXPECT_EQ(closed_subject[rid], expected);
        EXPECT_EQ(e.payload.at("subject_hash").as_digest(), expected);
    }
    EXPECT_EQ(updates, 4u);
}

// --- voting ---------------------------------------------------------------

TEST(VoteProperty, RandomSmallKeyRoundTrips) {
    gmp_randclass g(gmp_randinit_mt);
    g.seed(99);
    for (int i = 0; i < 200; ++i) {
        const auto key = mc::vote::keygen(16 + static_cast<unsigned>(i % 5) * 16, static_cast<std::uint64_t>(i));
        ASSERT_TRUE(mc::vote::check_key(key));
        const auto pk = key.public_key();
        mc::vote::BigInt m, r;
        do m = g.get_z_range(pk.n);
        while (m == 0);
        do r = g.get_z_range(pk.n);
        while (r <= 1 || gcd(r, pk.n) != 1);
        const auto s = mc::vote::unblind(mc::vote::sign_blinded(mc::vote::blind(m, r, pk), key), r, pk);
        EXPECT_TRUE(mc::vote::verify_signature(m, s, pk)) << i;
    }
}

TEST(VoteProperty, BallotsNeverExceedVotersAndRecountsAgree) {
    std::mt19937_64 rng(17);
    World w;
    std::vector<mc::identity::Credential> people;
    for (int i = 0; i < 8; ++i) people.push_back(w.add("p" + std::to_string(i), mc::identity::Role::User));
    std::vector<Digest> rounds;
    for (int r = 0; r < 5; ++r) {
        mc::vote::RoundConfig cfg;
        cfg.subject_hash = mc::sha256("subject" + std::to_string(r));
        cfg.quorum = 1 + rng() % 5;
        const auto n = 1 + rng() % people.size();
        for (std::size_t i = 0; i < n; ++i) cfg.eligible_voters.insert(people[i].address());
        const auto rid = w.node.voting.open_round(cfg, w.gov, 128, static_cast<std::uint64_t>(r));
        rounds.push_back(rid);
        for (std::size_t i = 0; i < people.size(); ++i) {
            mc::vote::BallotToken kept;
            try {
                mc::testing::Voter::vote(w.node.voting, rid, people[i], rng() % 2 ? "approve" : "reject", rng, &kept);
            } catch (const mc::Error& e) {
                EXPECT_EQ(e.code(), mc::ErrorCode::NotEligible);
                continue;
            }
            EXPECT_TRUE(throws_domain_error([&] { (void)w.node.voting.cast_vote(rid, kept, "approve"); }));
            EXPECT_TRUE(throws_domain_error([&] { mc::testing::Voter::vote(w.node.voting, rid, people[i], "approve", rng); }));
        }
        (void)w.node.voting.close_and_tally(rid, w.gov);
    }
    w.node.flush();
    const auto& chain = w.node.ledger.blocks();
    for (const auto& rid : rounds) {
        std::set<std::string> serials;
        std::size_t casts = 0;
        for (const auto& e : all_events(w))
            if (e.kind == EventKind::VoteCast && e.payload.at("round_id").as_digest() == rid) {
                ++casts;
                EXPECT_TRUE(serials.insert(mc::canonical_encode(e.payload.at("serial"))).second);
            }
        EXPECT_LE(casts, w.node.voting.find_round(rid)->config.eligible_voters.size());
        EXPECT_EQ(*mc::vote::recount(chain, rid), *mc::vote::recorded_tally(chain, rid));
    }
}

// --- certification --------------------------------------------------------

TEST(CertificationProperty, RandomWorkflowsRespectTheAuthorityGate) {
    std::mt19937_64 rng(5);
    std::size_t certified_total = 0;
    for (int trial = 0; trial < 25; ++trial) {
        World w;
        std::vector<Digest> defs{w.define("A"), w.define("B")};
        std::vector<mc::identity::Credential> holders;
        for (int i = 0; i < 4; ++i) holders.push_back(w.add("h" + std::to_string(i), mc::identity::Role::User));
        std::vector<Digest> apps;
        auto& f = w.node.certification;
        for (int step = 0; step < 120; ++step) {
            const auto& def = defs[rng() % 2];
            try {
                switch (rng() % 9) {
                    case 0:
                    case 1: (void)w.mint(def, holders[rng() % 4], rng() % 2 ? "gold" : "silver"); break;
                    case 2: {
                        mc::certification::ApplicationPayload p;
                        p.definition_id = def;
                        p.awarding_rules = "rules";
                        apps.push_back(f.submit_application(w.plat, p));
                        break;
                    }
                    case 3: if (!apps.empty()) f.begin_review(apps[rng() % apps.size()], w.gov); break;
                    case 4: if (!apps.empty()) f.decide(apps[rng() % apps.size()], mc::certification::Decision::Approve, w.passing_review(), "", w.gov); break;
                    case 5: {
                        auto r = w.passing_review();
                        r.design_ok = false;
                        if (!apps.empty()) f.decide(apps[rng() % apps.size()], mc::certification::Decision::Reject, r, "unclear", w.gov);
                        break;
                    }
                    case 6: {
                        if (apps.empty()) break;
                        const auto id = apps[rng() % apps.size()];
                        std::set<Digest> expected;
                        const auto* app = f.find(id);
                        if (app->state == mc::certification::AppState::Approved)
                            for (const auto* t : w.node.registry.tokens_of_definition(app->payload.definition_id))
                                if (t->status == TokenStatus::PlatformIssued || t->status == TokenStatus::Certified)
                                    expected.insert(t->token_id);
                        f.certify(id, w.gov);
                        std::set<Digest> certified;
                        for (const auto* t : w.node.registry.tokens_of_definition(app->payload.definition_id))
                            if (t->status == TokenStatus::Certified) certified.insert(t->token_id);
                        EXPECT_EQ(certified, expected);
                        break;
                    }
                    case 7: {
                        const auto& toks = w.node.registry.tokens();
                        if (toks.empty()) break;
                        auto it = toks.begin();
                        std::advance(it, static_cast<long>(rng() % toks.size()));
                        if (rng() % 2) w.node.registry.freeze_token(it->first, w.gov);
                        else w.node.registry.revoke_token(it->first, w.gov);
                        break;
                    }
                    default: if (!apps.empty()) f.resubmit(apps[rng() % apps.size()], f.find(apps[rng() % apps.size()])->payload, w.plat); break;
                }
            } catch (const mc::Error&) {
            }
            w.tick();
        }
        for (const auto* a : f.list(std::nullopt))
            if (a->state == mc::certification::AppState::Rejected) EXPECT_FALSE(a->rejection_reason.value_or("").empty());

        std::set<Digest> approved_defs;
        std::map<Digest, std::string> minted_by;
        for (const auto& e : all_events(w)) {
            if (e.kind == EventKind::ApplicationDecision && e.payload.at("decision").as_string() == "approve")
                approved_defs.insert(e.payload.at("definition_id").as_digest());
            if (e.kind == EventKind::TokenMinted)
                EXPECT_EQ(e.author, w.node.registry.find_definition(e.payload.at("definition_id").as_digest())->issuer);
            if (e.kind == EventKind::TokenCertified) {
                const auto* t = w.node.registry.find_token(e.payload.at("token_id").as_digest());
                EXPECT_TRUE(approved_defs.count(t->definition_id)) << "certified before approval";
                ++certified_total;
            }
        }
    }
    EXPECT_GT(certified_total, 25u);  // the walks do reach certification
}

// --- gateway --------------------------------------------------------------

namespace {

struct Journaled {
    mc::testing::TempDir dir;
    std::unique_ptr<mc::gateway::Service> svc;
    std::unique_ptr<mc::testing::Client> client;

    Journaled() {
        mc::gateway::Service::init(dir.path, mc::testing::small_node_config(), "gov");
        reopen();
        svc->provision("plat", mc::identity::Role::Platform);
        svc->provision("alice", mc::identity::Role::User);
    }
    void reopen() {
        client.reset();
        svc = std::make_unique<mc::gateway::Service>(dir.path);
        client = std::make_unique<mc::testing::Client>(*svc);
    }
};

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_all(const std::filesystem::path& p, const std::string& data) {
    std::ofstream(p, std::ios::binary | std::ios::trunc) << data;
}

}  // namespace

TEST(GatewayProperty, EveryMutationIsAttributedToItsCaller) {
    Journaled j;
    auto& c = *j.client;
    std::size_t seen = 0;
    auto check = [&](const std::string& actor) {
        const auto blocks = j.svc->blocks();
        std::vector<mc::ledger::LedgerEvent> events;
        for (const auto& b : blocks) events.insert(events.end(), b.events.begin(), b.events.end());
        for (std::size_t i = seen; i < events.size(); ++i) EXPECT_EQ(events[i].author, actor) << mc::ledger::to_string(events[i].kind);
        seen = events.size();
    };
    const auto def = c.json(c.call("POST", "/v1/definitions", Value::Map{{"metadata", mc::testing::scholar_metadata()}}, "plat"));
    check("plat");
    c.call("POST", "/v1/tokens", Value::Map{{"definition_id", def.at("definition_id")}, {"grade", "gold"}, {"holder", "alice"}}, "plat");
    check("plat");
    const auto app = c.json(c.call("POST", "/v1/applications",
                                   Value::Map{{"payload", Value::Map{{"awarding_rules", "r"}, {"definition_id", def.at("definition_id")},
                                                                     {"sample_awards", Value::List{}}}}},
                                   "plat"));
    const auto id = app.at("application_id").as_string();
    c.call("POST", "/v1/applications/" + id + "/review", Value::Map{}, "gov");
    c.call("POST", "/v1/applications/" + id + "/decision",
           Value::Map{{"decision", "approve"}, {"review", mc::testing::passing_review_value()}}, "gov");
    check("gov");
    c.call("POST", "/v1/applications/" + id + "/certify", Value::Map{}, "gov");
    check("gov");
    EXPECT_GE(seen, 5u);
}

TEST(GatewayProperty, CrashAtAnyRecordBoundaryReplays) {
    Journaled j;
    auto& c = *j.client;
    const auto def = c.json(c.call("POST", "/v1/definitions", Value::Map{{"metadata", mc::testing::scholar_metadata()}}, "plat"));
    for (const char* g : {"gold", "silver"})
        c.call("POST", "/v1/tokens", Value::Map{{"definition_id", def.at("definition_id")}, {"grade", g}, {"holder", "alice"}}, "plat");
    c.call("POST", "/v1/tokens", Value::Map{{"definition_id", def.at("definition_id")}, {"grade", "gold"}, {"holder", "alice"}}, "plat");
    j.svc.reset();

    const auto journal = j.dir.path / "journal.log";
    const auto chain_file = j.dir.path / "chain.log";
    const auto full_journal = read_all(journal);
    const auto full_chain = read_all(chain_file);
    const auto records = mc::gateway::read_journal(journal);
    std::vector<std::uint64_t> cuts{8};
    for (const auto& r : records) cuts.push_back(r.offset);
    cuts.push_back(full_journal.size());
    std::string genesis_only;
    {
        std::ostringstream out;
        mc::ledger::write_chain_record(out, mc::ledger::make_genesis());
        genesis_only = out.str();
    }
    for (const auto cut : cuts) {
        // the process died after `cut` bytes of journal, before any later chain append
        write_all(journal, full_journal.substr(0, cut));
        write_all(chain_file, genesis_only);
        EXPECT_NO_THROW(j.reopen()) << "cut at " << cut;
        j.svc.reset();
    }
    write_all(journal, full_journal);
    write_all(chain_file, full_chain);
    EXPECT_NO_THROW(j.reopen());
}

TEST(GatewayProperty, CliMutationIsOneApiCall) {
    mc::testing::TempDir dir;
    std::ostringstream out, err;
    auto run = [&](std::vector<std::string> args) {
        args.insert(args.begin(), {"--data-dir", dir.path.string()});
        out.str("");
        err.str("");
        return mc::cli::run(args, out, err);
    };
    ASSERT_EQ(run({"init", "--authority", "gov", "--difficulty", "2", "--vote-key-bits", "128"}), 0);
    ASSERT_EQ(run({"keygen", "--actor", "plat", "--role", "platform"}), 0);
    const auto meta = dir.path / "m.json";
    write_all(meta, mc::canonical_encode(mc::testing::scholar_metadata()));
    const auto before = mc::gateway::read_journal(dir.path / "journal.log").size();
    ASSERT_EQ(run({"define", "--actor", "plat", "--metadata", meta.string()}), 0) << err.str();
    const auto records = mc::gateway::read_journal(dir.path / "journal.log");
    ASSERT_EQ(records.size(), before + 1);
    const auto& rec = records.back().body;
    EXPECT_EQ(rec.at("method").as_string(), "POST");
    EXPECT_EQ(rec.at("path").as_string(), "/v1/definitions");
    EXPECT_EQ(rec.at("actor").as_string(), "plat");
    EXPECT_EQ(mc::parse_text(rec.at("body").as_string()).at("metadata"), mc::testing::scholar_metadata());
}
