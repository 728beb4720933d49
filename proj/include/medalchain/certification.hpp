#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medalchain/blind_vote.hpp"
#include "medalchain/identity.hpp"
#include "medalchain/ledger.hpp"
#include "medalchain/registry.hpp"

namespace medalchain::certification {

using identity::Address;
using identity::Credential;

enum class AppState { Draft, Submitted, UnderReview, Approved, Rejected, Withdrawn };
enum class AppAction { Submit, BeginReview, Approve, Reject, Resubmit, Withdraw };

std::string_view to_string(AppState state) noexcept;
std::string_view to_string(AppAction action) noexcept;
std::optional<AppState> state_from_string(std::string_view name) noexcept;

/// The application workflow table; nullopt marks an illegal pair.
std::optional<AppState> next_state(AppState state, AppAction action) noexcept;

struct SampleAward {
    Digest token_id{};
    Address holder{};
    std::string eligibility_proof;

    [[nodiscard]] Value to_value() const;
    static SampleAward from_value(const Value& v);
};

struct ApplicationPayload {
    Digest definition_id{};
    std::string awarding_rules;
    std::vector<SampleAward> sample_awards;
    std::optional<Digest> voting_round;  // closed round whose tally backs the badge
    std::string supporting_materials;

    [[nodiscard]] Value to_value() const;
    static ApplicationPayload from_value(const Value& v);
};

/// The authority's four-part review: legal compliance, design quality
/// (clear, fair, valuable), platform and record authenticity, and security.
struct ReviewRecord {
    bool compliance_ok = false;
    bool design_ok = false;
    bool platform_ok = false;
    bool security_ok = false;
    std::array<std::string, 4> notes;
    std::string reviewer;
    std::int64_t reviewed_at = 0;

    [[nodiscard]] bool all_passed() const noexcept { return compliance_ok && design_ok && platform_ok && security_ok; }
    [[nodiscard]] Value to_value() const;
    /// IncompleteReview when any of the four checks or notes is missing.
    static ReviewRecord from_value(const Value& v);
};

enum class Decision { Approve, Reject };

struct CertificationApplication {
    Digest application_id{};
    std::string platform;
    ApplicationPayload payload;
    AppState state = AppState::Draft;
    std::optional<ReviewRecord> review;
    std::optional<std::string> rejection_reason;
    std::uint32_t revision = 1;
    std::optional<std::string> reviewer;
    std::optional<std::string> official_description;
    std::optional<Digest> decision_event;

    [[nodiscard]] Value to_value() const;
    /// Hash over identity, payload and revision; cited by the decision event.
    [[nodiscard]] Digest application_hash() const;
};

struct LinkageReport {
    std::vector<Digest> certified;
    std::vector<std::pair<Digest, std::string>> skipped;  // token, reason
    std::size_t events_appended = 0;

    [[nodiscard]] Value to_value() const;
};

class CertificationFlow {
public:
    CertificationFlow(ledger::Ledger& ledger, registry::BadgeRegistry& registry, const vote::VotingService& voting,
                      const identity::Directory& directory);
    CertificationFlow(const CertificationFlow&) = delete;
    CertificationFlow& operator=(const CertificationFlow&) = delete;

    Digest save_draft(const Credential& platform, ApplicationPayload payload);
    void submit(const Digest& application_id, const Credential& platform);
    /// Draft and submit in one step; returns the Submitted application's id.
    Digest submit_application(const Credential& platform, ApplicationPayload payload);

    void begin_review(const Digest& application_id, const Credential& authority);
    AppState decide(const Digest& application_id, Decision decision, ReviewRecord review,
                    const std::string& rejection_reason, const Credential& authority,
                    std::optional<std::string> official_description = std::nullopt);
    LinkageReport certify(const Digest& application_id, const Credential& authority);

    void resubmit(const Digest& application_id, ApplicationPayload amended, const Credential& platform);
    void withdraw(const Digest& application_id, const Credential& platform);

    [[nodiscard]] const CertificationApplication* find(const Digest& application_id) const;
    [[nodiscard]] std::vector<const CertificationApplication*> list(std::optional<AppState> state) const;

    [[nodiscard]] Value snapshot() const;

private:
    CertificationApplication& require(const Digest& application_id);
    void check_payload(const Credential& platform, const ApplicationPayload& payload) const;
    static void transition(CertificationApplication& app, AppAction action);

    ledger::Ledger& ledger_;
    registry::BadgeRegistry& registry_;
    const vote::VotingService& voting_;
    const identity::Directory& directory_;
    std::map<Digest, CertificationApplication> applications_;
    std::uint64_t created_ = 0;
};

}  // namespace medalchain::certification
