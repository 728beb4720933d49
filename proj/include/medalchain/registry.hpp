#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "medalchain/identity.hpp"
#include "medalchain/ledger.hpp"

namespace medalchain::registry {

using identity::Address;
using identity::Credential;

inline constexpr std::size_t kMaxNameChars = 128;
inline constexpr std::size_t kMaxDescriptionChars = 2048;

/// The central metadata standard every badge definition follows.
struct BadgeMetadata {
    std::string name;
    Digest icon{};  // content hash of the off-ledger image
    std::string description;
    std::string criteria;
    std::vector<std::string> grade_levels;

    [[nodiscard]] Value to_value() const;
    static BadgeMetadata from_value(const Value& v);
};

struct BadgeDefinition {
    Digest definition_id{};
    BadgeMetadata metadata;
    std::string issuer;
    std::int64_t created_at = 0;

    [[nodiscard]] bool has_grade(std::string_view grade) const;
    [[nodiscard]] Value to_value() const;
};

/// definition_id: hash over the metadata plus issuer, independent of time.
Digest definition_id_for(const BadgeMetadata& metadata, std::string_view issuer);

/// Field bounds; throws SchemaViolation.
void check_metadata(const BadgeMetadata& metadata);

enum class TokenStatus { PlatformIssued, Certified, Frozen, Revoked };
enum class TokenAction { Certify, Freeze, Restore, Revoke };

std::string_view to_string(TokenStatus status) noexcept;
std::string_view to_string(TokenAction action) noexcept;

/// The token status machine. nullopt marks an illegal (status, action) pair.
std::optional<TokenStatus> next_status(TokenStatus status, TokenAction action) noexcept;

struct BadgeToken {
    Digest token_id{};
    Digest definition_id{};
    Address holder{};
    std::string grade;
    std::string issuer;
    TokenStatus status = TokenStatus::PlatformIssued;
    std::optional<std::string> official_description;
    std::int64_t minted_at = 0;
    std::optional<std::int64_t> certified_at;
    std::uint32_t award_index = 0;

    [[nodiscard]] bool live() const noexcept { return status != TokenStatus::Revoked; }
    [[nodiscard]] Value to_value() const;
};

/// SHA-256(definition_id ‖ holder ‖ minted_at ‖ issuer ‖ 0x00 ‖ grade ‖ 0x00 ‖ award_index),
/// integers as big-endian fixed width.
Digest token_id_for(const Digest& definition_id, const Address& holder, std::int64_t minted_at,
                    std::string_view issuer, std::string_view grade, std::uint32_t award_index);

struct CitedEvent {
    std::uint64_t height;
    ledger::LedgerEvent event;
    ledger::MerkleProof proof;
    Digest block_root;
    bool proof_ok;
};

struct VerificationReport {
    bool exists = false;
    std::optional<BadgeToken> token;
    std::vector<CitedEvent> history;
    std::size_t pending_events = 0;  // events not yet sealed into a block
    bool certified = false;

    [[nodiscard]] bool all_proofs_ok() const;
    [[nodiscard]] Value to_value() const;
};

/// NFT-style badge layer. State is a pure function of the ledger's event
/// stream: every mutation appends an event, and the registry's ledger
/// observer applies it.
class BadgeRegistry {
public:
    BadgeRegistry(ledger::Ledger& ledger, const identity::Directory& directory);
    BadgeRegistry(const BadgeRegistry&) = delete;
    BadgeRegistry& operator=(const BadgeRegistry&) = delete;

    Digest register_definition(const BadgeMetadata& metadata, const Credential& issuer);
    BadgeToken mint_token(const Digest& definition_id, const Address& holder, const std::string& grade,
                          const Credential& issuer);
    [[nodiscard]] VerificationReport verify_token(const Digest& token_id) const;

    TokenStatus freeze_token(const Digest& token_id, const Credential& authority);
    TokenStatus revoke_token(const Digest& token_id, const Credential& authority);
    /// Frozen -> Certified; only for definitions the authority has approved.
    TokenStatus restore_token(const Digest& token_id, const Credential& authority);

    /// PlatformIssued -> Certified as part of the certification workflow.
    void certify_token(const Digest& token_id, const Digest& application_id, const std::string& official_description,
                       const Credential& authority);

    [[nodiscard]] const BadgeDefinition* find_definition(const Digest& definition_id) const;
    [[nodiscard]] const BadgeToken* find_token(const Digest& token_id) const;
    [[nodiscard]] std::vector<const BadgeToken*> tokens_of_definition(const Digest& definition_id) const;
    [[nodiscard]] std::vector<const BadgeToken*> tokens_held_by(const Address& holder) const;
    [[nodiscard]] bool definition_approved(const Digest& definition_id) const;
    [[nodiscard]] const std::map<Digest, BadgeToken>& tokens() const noexcept { return tokens_; }
    [[nodiscard]] const std::map<Digest, BadgeDefinition>& definitions() const noexcept { return definitions_; }

    /// Ledger observer; also usable to rebuild indexes from a chain.
    void apply(const ledger::LedgerEvent& event);
    [[nodiscard]] Value snapshot() const;

private:
    using AwardKey = std::tuple<Digest, Address, std::string>;

    const BadgeToken& require_token(const Digest& token_id) const;
    TokenStatus authority_transition(const Digest& token_id, const Credential& authority, TokenAction action);

    ledger::Ledger& ledger_;
    const identity::Directory& directory_;
    std::map<Digest, BadgeDefinition> definitions_;
    std::map<Digest, BadgeToken> tokens_;
    std::map<AwardKey, Digest> live_awards_;
    std::map<AwardKey, std::uint32_t> award_counts_;
    std::set<Digest> approved_definitions_;
};

}  // namespace medalchain::registry
