#include "medalchain/certification.hpp"

#include <algorithm>

namespace medalchain::certification {

using ledger::EventKind;
using registry::TokenStatus;

namespace {

constexpr std::array<std::string_view, 6> kStateNames = {"Draft",    "Submitted", "UnderReview",
                                                         "Approved", "Rejected",  "Withdrawn"};
constexpr std::array<std::string_view, 4> kCheckNames = {"compliance", "design", "platform", "security"};

}  // namespace

std::string_view to_string(AppState state) noexcept { return kStateNames[static_cast<std::size_t>(state)]; }

std::string_view to_string(AppAction action) noexcept {
    switch (action) {
        case AppAction::Submit: return "Submit";
        case AppAction::BeginReview: return "BeginReview";
        case AppAction::Approve: return "Approve";
        case AppAction::Reject: return "Reject";
        case AppAction::Resubmit: return "Resubmit";
        case AppAction::Withdraw: return "Withdraw";
    }
    return "?";
}

std::optional<AppState> state_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kStateNames.size(); ++i)
        if (kStateNames[i] == name) return static_cast<AppState>(i);
    return std::nullopt;
}

std::optional<AppState> next_state(AppState state, AppAction action) noexcept {
    switch (state) {
        case AppState::Draft:
            if (action == AppAction::Submit) return AppState::Submitted;
            if (action == AppAction::Withdraw) return AppState::Withdrawn;
            return std::nullopt;
        case AppState::Submitted:
            if (action == AppAction::BeginReview) return AppState::UnderReview;
            if (action == AppAction::Withdraw) return AppState::Withdrawn;
            return std::nullopt;
        case AppState::UnderReview:
            if (action == AppAction::Approve) return AppState::Approved;
            if (action == AppAction::Reject) return AppState::Rejected;
            return std::nullopt;
        case AppState::Rejected:
            if (action == AppAction::Resubmit) return AppState::Submitted;
            if (action == AppAction::Withdraw) return AppState::Withdrawn;
            return std::nullopt;
        case AppState::Approved:
        case AppState::Withdrawn:
            return std::nullopt;
    }
    return std::nullopt;
}

// --- records --------------------------------------------------------------

Value SampleAward::to_value() const {
    return Value::Map{{"eligibility_proof", eligibility_proof}, {"holder", Value(holder)}, {"token_id", Value(token_id)}};
}

SampleAward SampleAward::from_value(const Value& v) {
    SampleAward s;
    s.token_id = v.at("token_id").as_digest();
    s.holder = v.at("holder").as_digest();
    if (const auto* p = v.find("eligibility_proof")) s.eligibility_proof = p->as_string();
    return s;
}

Value ApplicationPayload::to_value() const {
    Value::List samples;
    for (const auto& s : sample_awards) samples.push_back(s.to_value());
    Value v = Value::Map{
        {"awarding_rules", awarding_rules},
        {"definition_id", Value(definition_id)},
        {"sample_awards", std::move(samples)},
        {"supporting_materials", supporting_materials},
    };
    if (voting_round) v["voting_round"] = Value(*voting_round);
    return v;
}

ApplicationPayload ApplicationPayload::from_value(const Value& v) {
    ApplicationPayload p;
    p.definition_id = v.at("definition_id").as_digest();
    p.awarding_rules = v.at("awarding_rules").as_string();
    for (const auto& s : v.at("sample_awards").as_list()) p.sample_awards.push_back(SampleAward::from_value(s));
    if (const auto* r = v.find("voting_round")) p.voting_round = r->as_digest();
    if (const auto* m = v.find("supporting_materials")) p.supporting_materials = m->as_string();
    return p;
}

Value ReviewRecord::to_value() const {
    Value::Map notes_map;
    for (std::size_t i = 0; i < notes.size(); ++i) notes_map.emplace(std::string(kCheckNames[i]), notes[i]);
    return Value::Map{
        {"compliance_ok", compliance_ok}, {"design_ok", design_ok},   {"platform_ok", platform_ok},
        {"security_ok", security_ok},     {"notes", std::move(notes_map)}, {"reviewer", reviewer},
        {"reviewed_at", reviewed_at},
    };
}

ReviewRecord ReviewRecord::from_value(const Value& v) {
    ReviewRecord r;
    try {
        r.compliance_ok = v.at("compliance_ok").as_bool();
        r.design_ok = v.at("design_ok").as_bool();
        r.platform_ok = v.at("platform_ok").as_bool();
        r.security_ok = v.at("security_ok").as_bool();
        const Value& notes = v.at("notes");
        for (std::size_t i = 0; i < kCheckNames.size(); ++i) r.notes[i] = notes.at(kCheckNames[i]).as_string();
    } catch (const Error& e) {
        fail(ErrorCode::IncompleteReview, std::string("review is incomplete: ") + e.what());
    }
    if (const auto* who = v.find("reviewer")) r.reviewer = who->as_string();
    if (const auto* at = v.find("reviewed_at")) r.reviewed_at = at->as_int();
    return r;
}

Value CertificationApplication::to_value() const {
    Value v = Value::Map{
        {"application_id", Value(application_id)},
        {"platform", platform},
        {"payload", payload.to_value()},
        {"state", std::string(to_string(state))},
        {"revision", revision},
    };
    if (review) v["review"] = review->to_value();
    if (rejection_reason) v["rejection_reason"] = *rejection_reason;
    if (reviewer) v["reviewer"] = *reviewer;
    if (official_description) v["official_description"] = *official_description;
    if (decision_event) v["decision_event"] = Value(*decision_event);
    return v;
}

Digest CertificationApplication::application_hash() const {
    return canonical_hash(Value::Map{
        {"application_id", Value(application_id)},
        {"payload", payload.to_value()},
        {"platform", platform},
        {"revision", revision},
    });
}

Value LinkageReport::to_value() const {
    Value::List done, skip;
    for (const auto& t : certified) done.push_back(Value(t));
    for (const auto& [t, why] : skipped) skip.push_back(Value::Map{{"reason", why}, {"token_id", Value(t)}});
    return Value::Map{{"certified", std::move(done)}, {"events_appended", events_appended}, {"skipped", std::move(skip)}};
}

// --- workflow -------------------------------------------------------------

CertificationFlow::CertificationFlow(ledger::Ledger& ledger, registry::BadgeRegistry& registry,
                                     const vote::VotingService& voting, const identity::Directory& directory)
    : ledger_(ledger), registry_(registry), voting_(voting), directory_(directory) {}

void CertificationFlow::transition(CertificationApplication& app, AppAction action) {
    auto next = next_state(app.state, action);
    if (!next) {
        fail(ErrorCode::IllegalTransition,
             std::string(to_string(action)) + " is not allowed from " + std::string(to_string(app.state)));
    }
    app.state = *next;
}

CertificationApplication& CertificationFlow::require(const Digest& application_id) {
    auto it = applications_.find(application_id);
    if (it == applications_.end()) fail(ErrorCode::UnknownApplication, "unknown application " + to_hex(application_id));
    return it->second;
}

void CertificationFlow::check_payload(const Credential& platform, const ApplicationPayload& payload) const {
    if (platform.role != identity::Role::Platform || !directory_.contains(platform.actor_id))
        fail(ErrorCode::Unauthorized, "applications are filed by registered platforms");
    const auto* def = registry_.find_definition(payload.definition_id);
    if (def == nullptr) fail(ErrorCode::UnknownDefinition, "unknown definition " + to_hex(payload.definition_id));
    if (def->issuer != platform.actor_id) fail(ErrorCode::ForeignDefinition, "definition belongs to '" + def->issuer + "'");
    for (const auto& s : payload.sample_awards) {
        const auto* t = registry_.find_token(s.token_id);
        if (t == nullptr || !t->live() || t->definition_id != payload.definition_id || t->holder != s.holder)
            fail(ErrorCode::DanglingSample, "sample award " + to_hex(s.token_id) + " is not a live award of this badge");
    }
    if (payload.voting_round) {
        const auto* r = voting_.find_round(*payload.voting_round);
        if (r == nullptr) fail(ErrorCode::UnknownRound, "voting data references an unknown round");
    }
}

Digest CertificationFlow::save_draft(const Credential& platform, ApplicationPayload payload) {
    check_payload(platform, payload);
    CertificationApplication app;
    app.platform = platform.actor_id;
    app.payload = std::move(payload);
    app.application_id = canonical_hash(Value::Map{
        {"created_at", ledger_.now()},
        {"definition_id", Value(app.payload.definition_id)},
        {"platform", app.platform},
        {"serial", created_++},
    });
    const Digest id = app.application_id;
    applications_.emplace(id, std::move(app));
    return id;
}

void CertificationFlow::submit(const Digest& application_id, const Credential& platform) {
    auto& app = require(application_id);
    if (platform.actor_id != app.platform) fail(ErrorCode::Unauthorized, "only the applying platform may submit");
    check_payload(platform, app.payload);
    transition(app, AppAction::Submit);
}

Digest CertificationFlow::submit_application(const Credential& platform, ApplicationPayload payload) {
    const Digest id = save_draft(platform, std::move(payload));
    submit(id, platform);
    return id;
}

void CertificationFlow::begin_review(const Digest& application_id, const Credential& authority) {
    if (!authority.is_authority()) fail(ErrorCode::Unauthorized, "only the central authority reviews applications");
    auto& app = require(application_id);
    transition(app, AppAction::BeginReview);
    app.reviewer = authority.actor_id;
    app.review.reset();
}

AppState CertificationFlow::decide(const Digest& application_id, Decision decision, ReviewRecord review,
                                   const std::string& rejection_reason, const Credential& authority,
                                   std::optional<std::string> official_description) {
    if (!authority.is_authority()) fail(ErrorCode::Unauthorized, "only the central authority decides applications");
    auto& app = require(application_id);
    if (app.state != AppState::UnderReview) {
        fail(ErrorCode::IllegalTransition, "decision requires UnderReview, application is " +
                                               std::string(to_string(app.state)));
    }
    if (decision == Decision::Approve && !review.all_passed())
        fail(ErrorCode::IncompleteReview, "approval requires all four checks to pass");
    if (decision == Decision::Reject && review.all_passed())
        fail(ErrorCode::IncompleteReview, "rejection requires at least one failed check");
    if (decision == Decision::Reject && rejection_reason.empty())
        fail(ErrorCode::IncompleteReview, "rejection requires a reason");

    review.reviewer = authority.actor_id;
    review.reviewed_at = ledger_.now();
    transition(app, decision == Decision::Approve ? AppAction::Approve : AppAction::Reject);
    app.review = review;
    if (decision == Decision::Reject) {
        app.rejection_reason = rejection_reason;
    } else {
        app.rejection_reason.reset();
        const auto* def = registry_.find_definition(app.payload.definition_id);
        app.official_description = official_description.value_or(def->metadata.description);
    }

    Value payload = Value::Map{
        {"application_id", Value(app.application_id)},
        {"application_hash", Value(app.application_hash())},
        {"definition_id", Value(app.payload.definition_id)},
        {"decision", decision == Decision::Approve ? "approve" : "reject"},
        {"compliance_ok", review.compliance_ok},
        {"design_ok", review.design_ok},
        {"platform_ok", review.platform_ok},
        {"security_ok", review.security_ok},
        {"revision", app.revision},
        {"reason", decision == Decision::Reject ? rejection_reason : std::string{}},
    };
    auto event = ledger_.append(EventKind::ApplicationDecision, std::move(payload), authority.actor_id);
    app.decision_event = event.id;
    ledger_.maybe_seal();
    return app.state;
}

LinkageReport CertificationFlow::certify(const Digest& application_id, const Credential& authority) {
    if (!authority.is_authority()) fail(ErrorCode::Unauthorized, "only the central authority certifies badges");
    auto& app = require(application_id);
    if (app.state != AppState::Approved) fail(ErrorCode::NotApproved, "application is not approved");
    const auto* def = registry_.find_definition(app.payload.definition_id);

    LinkageReport report;
    for (const auto* token : registry_.tokens_of_definition(app.payload.definition_id)) {
        switch (token->status) {
            case TokenStatus::Certified: continue;
            case TokenStatus::Frozen: report.skipped.emplace_back(token->token_id, "frozen"); continue;
            case TokenStatus::Revoked: report.skipped.emplace_back(token->token_id, "revoked"); continue;
            case TokenStatus::PlatformIssued: break;
        }
        if (!def->has_grade(token->grade)) {
            report.skipped.emplace_back(token->token_id, "grade not in certified definition");
            continue;
        }
        const Digest token_id = token->token_id;
        const Address holder = token->holder;
        const std::string issuer = token->issuer;
        registry_.certify_token(token_id, application_id, *app.official_description, authority);
        ledger_.append(EventKind::RecordLinked,
                       Value::Map{
                           {"token_id", Value(token_id)},
                           {"definition_id", Value(app.payload.definition_id)},
                           {"application_id", Value(application_id)},
                           {"official_entry", Value(*app.decision_event)},
                           {"holder", Value(holder)},
                           {"platform", issuer},
                       },
                       authority.actor_id);
        report.certified.push_back(token_id);
        report.events_appended += 2;
    }
    if (report.events_appended > 0) ledger_.maybe_seal();
    return report;
}

void CertificationFlow::resubmit(const Digest& application_id, ApplicationPayload amended, const Credential& platform) {
    auto& app = require(application_id);
    if (platform.actor_id != app.platform) fail(ErrorCode::Unauthorized, "only the applying platform may resubmit");
    if (app.state != AppState::Rejected) {
        fail(ErrorCode::IllegalTransition, "resubmission requires Rejected, application is " +
                                               std::string(to_string(app.state)));
    }
    if (amended.definition_id != app.payload.definition_id)
        fail(ErrorCode::SchemaViolation, "a resubmission cannot change the badge definition");
    check_payload(platform, amended);
    transition(app, AppAction::Resubmit);
    app.payload = std::move(amended);
    ++app.revision;
    app.review.reset();
    app.reviewer.reset();
    app.rejection_reason.reset();
}

void CertificationFlow::withdraw(const Digest& application_id, const Credential& platform) {
    auto& app = require(application_id);
    if (platform.actor_id != app.platform) fail(ErrorCode::Unauthorized, "only the applying platform may withdraw");
    transition(app, AppAction::Withdraw);
}

const CertificationApplication* CertificationFlow::find(const Digest& application_id) const {
    auto it = applications_.find(application_id);
    return it == applications_.end() ? nullptr : &it->second;
}

std::vector<const CertificationApplication*> CertificationFlow::list(std::optional<AppState> state) const {
    std::vector<const CertificationApplication*> out;
    for (const auto& [id, app] : applications_)
        if (!state || app.state == *state) out.push_back(&app);
    return out;
}

Value CertificationFlow::snapshot() const {
    Value::List apps;
    for (const auto& [id, app] : applications_) apps.push_back(app.to_value());
    return apps;
}

}  // namespace medalchain::certification
