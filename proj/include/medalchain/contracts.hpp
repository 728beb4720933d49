#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medalchain/blind_vote.hpp"
#include "medalchain/identity.hpp"
#include "medalchain/ledger.hpp"
#include "medalchain/registry.hpp"

namespace medalchain::contracts {

using identity::Address;
using identity::Credential;

/// One counted-action atom: at least `min_count` events tagged `action`,
/// optionally restricted to the window [now - window_seconds, now].
struct Condition {
    std::string action;
    std::uint64_t min_count = 1;
    std::optional<std::int64_t> window_seconds;

    [[nodiscard]] Value to_value() const;
    static Condition from_value(const Value& v);
    bool operator==(const Condition&) const = default;
};

Value conditions_value(std::span<const Condition> conditions);
std::vector<Condition> conditions_from(const Value& v);
void check_conditions(std::span<const Condition> conditions);

/// Off-chain behaviour record; never written to the ledger.
struct ActivityEvent {
    Address user{};
    std::string action;
    std::string platform;
    std::int64_t occurred_at = 0;
    Value attributes;

    [[nodiscard]] Value to_value() const;
    static ActivityEvent from_value(const Value& v);
};

struct RuleContract {
    Digest contract_id{};
    Digest definition_id{};
    std::string grade;
    std::vector<Condition> conditions;
    std::uint64_t version = 1;
    bool active = true;
    std::string owner;

    [[nodiscard]] Value to_value() const;
    static RuleContract from_value(const Value& v);
};

/// Conjunction of all conditions over `log`. Pure; InactiveContract if the
/// contract is switched off.
bool evaluate(const RuleContract& contract, std::span<const ActivityEvent> log, std::int64_t now);

/// The subject a governance vote must be bound to for a rule change.
Digest rule_change_subject(const Digest& contract_id, std::uint64_t base_version,
                           std::span<const Condition> new_conditions);

class ContractEngine {
public:
    ContractEngine(ledger::Ledger& ledger, registry::BadgeRegistry& registry, const vote::VotingService& voting,
                   const identity::Directory& directory);
    ContractEngine(const ContractEngine&) = delete;
    ContractEngine& operator=(const ContractEngine&) = delete;

    void ingest(const ActivityEvent& event, const Credential& platform);
    [[nodiscard]] std::span<const ActivityEvent> activity_of(const Address& user) const;

    Digest create_contract(const Digest& definition_id, const std::string& grade, std::vector<Condition> conditions,
                           const Credential& platform);

    /// Evaluates against `log` at `now` and mints on success.
    registry::BadgeToken execute_issuance(const Digest& contract_id, const Address& user,
                                          std::span<const ActivityEvent> log, std::int64_t now,
                                          const Credential& caller);
    /// Same, using the ingested activity feed and the ledger clock.
    registry::BadgeToken execute_issuance(const Digest& contract_id, const Address& user, const Credential& caller);

    RuleContract update_rules(const Digest& contract_id, std::uint64_t base_version,
                              std::vector<Condition> new_conditions, const vote::TallyResult& vote_result,
                              const Credential& caller);

    /// Emergency switch held by the central authority.
    void set_active(const Digest& contract_id, bool active, const Credential& authority);

    [[nodiscard]] const RuleContract* find_contract(const Digest& contract_id) const;
    [[nodiscard]] const std::map<Digest, RuleContract>& all() const noexcept { return contracts_; }

    void apply(const ledger::LedgerEvent& event);
    [[nodiscard]] Value snapshot() const;

private:
    const RuleContract& require(const Digest& contract_id) const;

    ledger::Ledger& ledger_;
    registry::BadgeRegistry& registry_;
    const vote::VotingService& voting_;
    const identity::Directory& directory_;
    std::map<Digest, RuleContract> contracts_;
    std::map<Address, std::vector<ActivityEvent>> activity_;
};

}  // namespace medalchain::contracts
