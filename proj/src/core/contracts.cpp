#include "medalchain/contracts.hpp"

#include <algorithm>

namespace medalchain::contracts {

using ledger::EventKind;

Value Condition::to_value() const {
    Value v = Value::Map{{"action", action}, {"min_count", min_count}};
    if (window_seconds) v["window_seconds"] = *window_seconds;
    return v;
}

Condition Condition::from_value(const Value& v) {
    Condition c;
    c.action = v.at("action").as_string();
    c.min_count = v.at("min_count").as_uint();
    if (const auto* w = v.find("window_seconds")) c.window_seconds = w->as_int();
    return c;
}

Value conditions_value(std::span<const Condition> conditions) {
    Value::List list;
    for (const auto& c : conditions) list.push_back(c.to_value());
    return list;
}

std::vector<Condition> conditions_from(const Value& v) {
    std::vector<Condition> out;
    for (const auto& c : v.as_list()) out.push_back(Condition::from_value(c));
    return out;
}

void check_conditions(std::span<const Condition> conditions) {
    if (conditions.empty()) fail(ErrorCode::SchemaViolation, "a contract needs at least one condition");
    for (const auto& c : conditions) {
        if (c.action.empty()) fail(ErrorCode::SchemaViolation, "condition action must not be empty");
        if (c.min_count < 1) fail(ErrorCode::SchemaViolation, "min_count must be at least 1");
        if (c.window_seconds && *c.window_seconds < 0) fail(ErrorCode::SchemaViolation, "window must be non-negative");
    }
}

Value ActivityEvent::to_value() const {
    return Value::Map{{"action", action},         {"attributes", attributes}, {"occurred_at", occurred_at},
                      {"platform", platform},     {"user", Value(user)}};
}

ActivityEvent ActivityEvent::from_value(const Value& v) {
    ActivityEvent a;
    a.user = v.at("user").as_digest();
    a.action = v.at("action").as_string();
    a.platform = v.find("platform") ? v.at("platform").as_string() : std::string{};
    a.occurred_at = v.at("occurred_at").as_int();
    a.attributes = v.find("attributes") ? v.at("attributes") : Value{};
    (void)a.attributes.as_map();
    return a;
}

Value RuleContract::to_value() const {
    return Value::Map{
        {"active", active},           {"conditions", conditions_value(conditions)},
        {"contract_id", Value(contract_id)}, {"definition_id", Value(definition_id)},
        {"grade", grade},             {"owner", owner},
        {"version", version},
    };
}

RuleContract RuleContract::from_value(const Value& v) {
    RuleContract c;
    c.contract_id = v.at("contract_id").as_digest();
    c.definition_id = v.at("definition_id").as_digest();
    c.grade = v.at("grade").as_string();
    c.conditions = conditions_from(v.at("conditions"));
    c.version = v.at("version").as_uint();
    c.active = v.at("active").as_bool();
    c.owner = v.at("owner").as_string();
    return c;
}

bool evaluate(const RuleContract& contract, std::span<const ActivityEvent> log, std::int64_t now) {
    if (!contract.active) fail(ErrorCode::InactiveContract, "contract is inactive");
    for (const auto& cond : contract.conditions) {
        const auto count = std::count_if(log.begin(), log.end(), [&](const ActivityEvent& e) {
            if (e.action != cond.action) return false;
            if (!cond.window_seconds) return true;
            return e.occurred_at >= now - *cond.window_seconds && e.occurred_at <= now;
        });
        if (static_cast<std::uint64_t>(count) < cond.min_count) return false;
    }
    return true;
}

Digest rule_change_subject(const Digest& contract_id, std::uint64_t base_version,
                           std::span<const Condition> new_conditions) {
    return canonical_hash(Value::Map{
        {"base_version", base_version},
        {"contract_id", Value(contract_id)},
        {"new_conditions", conditions_value(new_conditions)},
        {"type", "rule_change"},
    });
}

// --- engine ---------------------------------------------------------------

ContractEngine::ContractEngine(ledger::Ledger& ledger, registry::BadgeRegistry& registry,
                               const vote::VotingService& voting, const identity::Directory& directory)
    : ledger_(ledger), registry_(registry), voting_(voting), directory_(directory) {
    ledger_.on_event([this](const ledger::LedgerEvent& e) { apply(e); });
}

void ContractEngine::ingest(const ActivityEvent& event, const Credential& platform) {
    if (platform.role != identity::Role::Platform || !directory_.contains(platform.actor_id))
        fail(ErrorCode::Unauthorized, "activity is reported by registered platforms");
    if (event.platform != platform.actor_id)
        fail(ErrorCode::IssuerMismatch, "activity platform does not match the reporting credential");
    auto& feed = activity_[event.user];
    if (!feed.empty() && event.occurred_at < feed.back().occurred_at)
        fail(ErrorCode::ActivityOutOfOrder, "activity timestamps must be non-decreasing per user");
    feed.push_back(event);
}

std::span<const ActivityEvent> ContractEngine::activity_of(const Address& user) const {
    auto it = activity_.find(user);
    if (it == activity_.end()) return {};
    return it->second;
}

Digest ContractEngine::create_contract(const Digest& definition_id, const std::string& grade,
                                       std::vector<Condition> conditions, const Credential& platform) {
    const auto* def = registry_.find_definition(definition_id);
    if (def == nullptr) fail(ErrorCode::UnknownDefinition, "unknown definition " + to_hex(definition_id));
    if (platform.actor_id != def->issuer || platform.role != identity::Role::Platform)
        fail(ErrorCode::IssuerMismatch, "only the badge issuer may attach issuance contracts");
    if (!def->has_grade(grade)) fail(ErrorCode::BadGrade, "grade '" + grade + "' is not defined for this badge");
    check_conditions(conditions);

    RuleContract c;
    c.definition_id = definition_id;
    c.grade = grade;
    c.conditions = std::move(conditions);
    c.owner = platform.actor_id;
    c.contract_id = canonical_hash(Value::Map{
        {"conditions", conditions_value(c.conditions)},
        {"created_at", ledger_.now()},
        {"definition_id", Value(definition_id)},
        {"grade", grade},
        {"owner", c.owner},
        {"serial", contracts_.size()},
    });
    const Digest id = c.contract_id;
    contracts_.emplace(id, std::move(c));
    return id;
}

const RuleContract& ContractEngine::require(const Digest& contract_id) const {
    const auto* c = find_contract(contract_id);
    if (c == nullptr) fail(ErrorCode::UnknownContract, "unknown contract " + to_hex(contract_id));
    return *c;
}

registry::BadgeToken ContractEngine::execute_issuance(const Digest& contract_id, const Address& user,
                                                      std::span<const ActivityEvent> log, std::int64_t now,
                                                      const Credential& caller) {
    const auto& c = require(contract_id);
    if (caller.actor_id != c.owner) fail(ErrorCode::Unauthorized, "only the contract owner may execute it");
    std::vector<ActivityEvent> user_log;
    std::copy_if(log.begin(), log.end(), std::back_inserter(user_log),
                 [&user](const ActivityEvent& e) { return e.user == user; });
    if (!evaluate(c, user_log, now)) fail(ErrorCode::NotEligible, "activity does not satisfy the contract");
    return registry_.mint_token(c.definition_id, user, c.grade, caller);
}

registry::BadgeToken ContractEngine::execute_issuance(const Digest& contract_id, const Address& user,
                                                      const Credential& caller) {
    return execute_issuance(contract_id, user, activity_of(user), ledger_.now(), caller);
}

RuleContract ContractEngine::update_rules(const Digest& contract_id, std::uint64_t base_version,
                                          std::vector<Condition> new_conditions,
                                          const vote::TallyResult& vote_result, const Credential& caller) {
    const auto& c = require(contract_id);
    if (caller.actor_id != c.owner && !caller.is_authority())
        fail(ErrorCode::Unauthorized, "only the contract owner may propose rule changes");
    check_conditions(new_conditions);

    // The tally must be the one actually recorded for a closed round.
    const auto* round = voting_.find_round(vote_result.round_id);
    if (round == nullptr || round->state != vote::RoundState::Closed || !round->tally ||
        !(*round->tally == vote_result) || !vote_result.passing) {
        fail(ErrorCode::VoteNotPassing, "rule changes need a closed, passing governance vote");
    }
    if (base_version != c.version) {
        fail(ErrorCode::StaleVersion, "proposal targets version " + std::to_string(base_version) +
                                          " but the contract is at " + std::to_string(c.version));
    }
    const Digest subject = rule_change_subject(contract_id, base_version, new_conditions);
    if (vote_result.subject_hash != subject)
        fail(ErrorCode::VoteSubjectMismatch, "the vote was not about this rule change");

    ledger_.append(EventKind::RuleUpdated,
                   Value::Map{
                       {"contract_id", Value(contract_id)},
                       {"old_version", c.version},
                       {"new_version", c.version + 1},
                       {"conditions", conditions_value(new_conditions)},
                       {"round_id", Value(vote_result.round_id)},
                       {"subject_hash", Value(subject)},
                       {"tally_digest", Value(vote_result.digest())},
                   },
                   caller.actor_id);
    ledger_.maybe_seal();
    return contracts_.at(contract_id);
}

void ContractEngine::set_active(const Digest& contract_id, bool active, const Credential& authority) {
    (void)require(contract_id);
    if (!authority.is_authority()) fail(ErrorCode::Unauthorized, "only the central authority may switch contracts");
    contracts_.at(contract_id).active = active;
}

const RuleContract* ContractEngine::find_contract(const Digest& contract_id) const {
    auto it = contracts_.find(contract_id);
    return it == contracts_.end() ? nullptr : &it->second;
}

void ContractEngine::apply(const ledger::LedgerEvent& event) {
    if (event.kind != EventKind::RuleUpdated) return;
    const Value& p = event.payload;
    auto it = contracts_.find(p.at("contract_id").as_digest());
    if (it == contracts_.end()) return;
    it->second.conditions = conditions_from(p.at("conditions"));
    it->second.version = p.at("new_version").as_uint();
}

Value ContractEngine::snapshot() const {
    Value::List contracts, activity;
    for (const auto& [id, c] : contracts_) contracts.push_back(c.to_value());
    for (const auto& [user, feed] : activity_)
        for (const auto& a : feed) activity.push_back(a.to_value());
    return Value::Map{{"activity", std::move(activity)}, {"contracts", std::move(contracts)}};
}

}  // namespace medalchain::contracts
