#include <gtest/gtest.h>

#include "medalchain/certification.hpp"
#include "expect_code.hpp"
#include "world.hpp"

namespace mc = medalchain;
using namespace mc::certification;
using mc::ledger::EventKind;
using mc::registry::TokenStatus;
using mc::testing::World;

namespace {

constexpr std::array kStates{AppState::Draft,    AppState::Submitted, AppState::UnderReview,
                             AppState::Approved, AppState::Rejected,  AppState::Withdrawn};
constexpr std::array kActions{AppAction::Submit,  AppAction::BeginReview, AppAction::Approve,
                              AppAction::Reject,  AppAction::Resubmit,    AppAction::Withdraw};

std::size_t count_kind(const World& w, EventKind kind) {
    std::size_t n = 0;
    w.node.ledger.for_each_event([&](const mc::ledger::LedgerEvent& e) { n += e.kind == kind; });
    return n;
}

ReviewRecord failing_review(const World& w) {
    auto r = w.passing_review();
    r.security_ok = false;
    return r;
}

ApplicationPayload payload(const mc::Digest& def) {
    ApplicationPayload p;
    p.definition_id = def;
    p.awarding_rules = "two exams";
    return p;
}

// Drives a fresh application into `target` through the public workflow.
mc::Digest reach(World& w, const mc::Digest& def, AppState target) {
    auto& f = w.node.certification;
    const auto id = f.save_draft(w.plat, payload(def));
    if (target == AppState::Draft) return id;
    if (target == AppState::Withdrawn) {
        f.withdraw(id, w.plat);
        return id;
    }
    f.submit(id, w.plat);
    if (target == AppState::Submitted) return id;
    f.begin_review(id, w.gov);
    if (target == AppState::UnderReview) return id;
    if (target == AppState::Approved) f.decide(id, Decision::Approve, w.passing_review(), "", w.gov);
    if (target == AppState::Rejected) f.decide(id, Decision::Reject, failing_review(w), "insecure", w.gov);
    return id;
}

void act(World& w, const mc::Digest& id, AppAction a) {
    auto& f = w.node.certification;
    switch (a) {
        case AppAction::Submit: f.submit(id, w.plat); break;
        case AppAction::BeginReview: f.begin_review(id, w.gov); break;
        case AppAction::Approve: f.decide(id, Decision::Approve, w.passing_review(), "", w.gov); break;
        case AppAction::Reject: f.decide(id, Decision::Reject, failing_review(w), "insecure", w.gov); break;
        case AppAction::Resubmit: f.resubmit(id, f.find(id)->payload, w.plat); break;
        case AppAction::Withdraw: f.withdraw(id, w.plat); break;
    }
}

}  // namespace

TEST(Workflow, TableHasExactlyTheDocumentedEdges) {
    const std::set<std::pair<AppState, AppAction>> legal{
        {AppState::Draft, AppAction::Submit},          {AppState::Draft, AppAction::Withdraw},
        {AppState::Submitted, AppAction::BeginReview}, {AppState::Submitted, AppAction::Withdraw},
        {AppState::UnderReview, AppAction::Approve},   {AppState::UnderReview, AppAction::Reject},
        {AppState::Rejected, AppAction::Resubmit},     {AppState::Rejected, AppAction::Withdraw},
    };
    for (auto s : kStates)
        for (auto a : kActions) EXPECT_EQ(next_state(s, a).has_value(), legal.count({s, a}) == 1);
    EXPECT_FALSE(next_state(AppState::Approved, AppAction::Withdraw));
    EXPECT_FALSE(next_state(AppState::UnderReview, AppAction::Withdraw));
}

TEST(Workflow, EveryPairBehavesAsTabledThroughTheFlow) {
    for (auto s : kStates) {
        for (auto a : kActions) {
            World w;
            const auto def = w.define();
            const auto id = reach(w, def, s);
            ASSERT_EQ(w.node.certification.find(id)->state, s);
            const auto expected = next_state(s, a);
            const auto digest = w.node.state_digest();
            if (expected) {
                act(w, id, a);
                EXPECT_EQ(w.node.certification.find(id)->state, *expected);
            } else {
                try {
                    act(w, id, a);
                    ADD_FAILURE() << to_string(s) << " accepted " << to_string(a);
                } catch (const mc::Error& e) {
                    EXPECT_EQ(e.code(), mc::ErrorCode::IllegalTransition) << to_string(s) << "/" << to_string(a);
                }
                EXPECT_EQ(w.node.state_digest(), digest);
            }
        }
    }
}

TEST(Workflow, StateNamesRoundTrip) {
    for (auto s : kStates) EXPECT_EQ(state_from_string(to_string(s)), s);
    EXPECT_FALSE(state_from_string("Pending"));
}

TEST(Application, PayloadChecks) {
    World w;
    const auto def = w.define();
    auto& f = w.node.certification;
    EXPECT_CODE((void)f.save_draft(w.other, payload(def)), ForeignDefinition);
    EXPECT_CODE((void)f.save_draft(w.alice, payload(def)), Unauthorized);
    EXPECT_CODE((void)f.save_draft(w.plat, payload(mc::sha256("x"))), UnknownDefinition);
    auto p = payload(def);
    p.sample_awards.push_back({mc::sha256("ghost"), w.alice.address(), "exam"});
    EXPECT_CODE((void)f.save_draft(w.plat, p), DanglingSample);
    p = payload(def);
    p.voting_round = mc::sha256("no-round");
    EXPECT_CODE((void)f.save_draft(w.plat, p), UnknownRound);
    p = payload(def);
    const auto tok = w.mint(def, w.alice);
    p.sample_awards.push_back({tok.token_id, w.alice.address(), "exam"});
    EXPECT_NO_THROW((void)f.save_draft(w.plat, p));
}

TEST(Application, OnlyAuthorityReviews) {
    World w;
    const auto def = w.define();
    auto& f = w.node.certification;
    const auto id = f.submit_application(w.plat, payload(def));
    EXPECT_CODE(f.begin_review(id, w.plat), Unauthorized);
    f.begin_review(id, w.gov);
    EXPECT_CODE((void)f.decide(id, Decision::Approve, w.passing_review(), "", w.plat), Unauthorized);
    EXPECT_CODE(f.withdraw(id, w.other), Unauthorized);
}

TEST(Application, DecisionNeedsConsistentReview) {
    World w;
    const auto def = w.define();
    auto& f = w.node.certification;
    const auto id = reach(w, def, AppState::UnderReview);
    EXPECT_CODE((void)f.decide(id, Decision::Approve, failing_review(w), "", w.gov), IncompleteReview);
    EXPECT_CODE((void)f.decide(id, Decision::Reject, w.passing_review(), "bad", w.gov), IncompleteReview);
    EXPECT_CODE((void)f.decide(id, Decision::Reject, failing_review(w), "", w.gov), IncompleteReview);
    EXPECT_EQ(f.find(id)->state, AppState::UnderReview);
    EXPECT_EQ(count_kind(w, EventKind::ApplicationDecision), 0u);
}

TEST(Application, ReviewRecordNeedsAllFourParts) {
    World w;
    auto v = w.passing_review().to_value();
    EXPECT_NO_THROW((void)ReviewRecord::from_value(v));
    v.as_map().erase("security_ok");
    EXPECT_CODE((void)ReviewRecord::from_value(v), IncompleteReview);
}

TEST(Application, RejectionThenResubmission) {
    World w;
    const auto def = w.define();
    auto& f = w.node.certification;
    const auto id = reach(w, def, AppState::Rejected);
    EXPECT_EQ(*f.find(id)->rejection_reason, "insecure");
    EXPECT_EQ(count_kind(w, EventKind::ApplicationDecision), 1u);
    auto amended = payload(def);
    amended.awarding_rules = "three exams";
    f.resubmit(id, amended, w.plat);
    const auto* app = f.find(id);
    EXPECT_EQ(app->state, AppState::Submitted);
    EXPECT_EQ(app->revision, 2u);
    EXPECT_FALSE(app->rejection_reason);
    EXPECT_FALSE(app->review);

    f.begin_review(id, w.gov);
    f.decide(id, Decision::Reject, failing_review(w), "still insecure", w.gov);
    auto other_def = payload(w.define("Other"));
    EXPECT_CODE(f.resubmit(id, other_def, w.plat), SchemaViolation);
}

TEST(Certify, LinksEveryLiveTokenOnce) {
    World w;
    const auto def = w.define();
    auto carol = w.add("carol", mc::identity::Role::User);
    std::vector<mc::Digest> tokens;
    for (const auto* who : {&w.alice, &w.bob, &carol}) tokens.push_back(w.mint(def, *who).token_id);
    const auto app = w.approve(def);
    auto& f = w.node.certification;
    EXPECT_CODE((void)f.certify(app, w.plat), Unauthorized);

    const auto report = f.certify(app, w.gov);
    EXPECT_EQ(report.certified.size(), 3u);
    EXPECT_EQ(report.events_appended, 6u);
    EXPECT_EQ(count_kind(w, EventKind::TokenCertified), 3u);
    EXPECT_EQ(count_kind(w, EventKind::RecordLinked), 3u);
    for (const auto& t : tokens) {
        const auto* tok = w.node.registry.find_token(t);
        EXPECT_EQ(tok->status, TokenStatus::Certified);
        EXPECT_EQ(tok->official_description, "Awarded for exams");
    }

    const auto before = w.node.ledger.event_count();
    const auto again = f.certify(app, w.gov);
    EXPECT_EQ(again.events_appended, 0u);
    EXPECT_EQ(w.node.ledger.event_count(), before);
}

TEST(Certify, SkipsFrozenAndRevoked) {
    World w;
    const auto def = w.define();
    const auto a = w.mint(def, w.alice).token_id;
    const auto b = w.mint(def, w.bob).token_id;
    const auto c = w.mint(def, w.bob, "silver").token_id;
    w.node.registry.freeze_token(a, w.gov);
    w.node.registry.revoke_token(b, w.gov);
    const auto report = w.node.certification.certify(w.approve(def), w.gov);
    ASSERT_EQ(report.certified.size(), 1u);
    EXPECT_EQ(report.certified[0], c);
    EXPECT_EQ(report.skipped.size(), 2u);
}

TEST(Certify, NeedsApproval) {
    World w;
    const auto def = w.define();
    const auto id = reach(w, def, AppState::UnderReview);
    EXPECT_CODE((void)w.node.certification.certify(id, w.gov), NotApproved);
    EXPECT_CODE((void)w.node.certification.certify(mc::sha256("x"), w.gov), UnknownApplication);
}

TEST(Certify, OfficialDescriptionOverride) {
    World w;
    const auto def = w.define();
    const auto tok = w.mint(def, w.alice).token_id;
    auto& f = w.node.certification;
    const auto id = reach(w, def, AppState::UnderReview);
    f.decide(id, Decision::Approve, w.passing_review(), "", w.gov, "Nationally recognised scholar");
    f.certify(id, w.gov);
    EXPECT_EQ(w.node.registry.find_token(tok)->official_description, "Nationally recognised scholar");
}
