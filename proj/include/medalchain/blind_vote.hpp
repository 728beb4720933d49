#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "medalchain/identity.hpp"
#include "medalchain/ledger.hpp"

namespace medalchain::vote {

using BigInt = mpz_class;
using identity::Address;
using identity::Credential;

Value bigint_value(const BigInt& x);  // big-endian bytes, hex on the wire
BigInt bigint_from(const Value& v);
BigInt bigint_from_bytes(std::span<const std::uint8_t> bytes);

struct RsaPublicKey {
    BigInt n;
    BigInt e;

    [[nodiscard]] Value to_value() const;
    static RsaPublicKey from_value(const Value& v);
};

/// Textbook RSA key with its factors kept for the invariant checker.
struct RsaKeyPair {
    BigInt n;
    BigInt e;
    BigInt d;
    BigInt p;
    BigInt q;

    [[nodiscard]] RsaPublicKey public_key() const { return {n, e}; }
    [[nodiscard]] Value to_value() const;
    static RsaKeyPair from_value(const Value& v);
};

inline constexpr unsigned kMinTestKeyBits = 16;
inline constexpr unsigned kServiceKeyBits = 2048;

/// n = p*q with p != q prime, and e*d = 1 mod lcm(p-1, q-1).
bool check_key(const RsaKeyPair& key);

/// Seeded generation; KeyTooSmall below 16 bits.
RsaKeyPair keygen(unsigned bits, std::uint64_t seed);

/// m * r^e mod n.
BigInt blind(const BigInt& message, const BigInt& r, const RsaPublicKey& key);
BigInt sign_blinded(const BigInt& blinded, const RsaKeyPair& key);
/// s_blind * r^-1 mod n.
BigInt unblind(const BigInt& blind_signature, const BigInt& r, const RsaPublicKey& key);
bool verify_signature(const BigInt& message, const BigInt& signature, const RsaPublicKey& key);

using Serial = std::array<std::uint8_t, 16>;

/// SHA-256("ballot" ‖ round_id ‖ serial) reduced mod n.
BigInt ballot_message(const Digest& round_id, const Serial& serial, const RsaPublicKey& key);

struct BallotToken {
    Serial serial{};
    BigInt signature;
};

/// Approval ratio as an exact fraction in (0, 1].
struct Threshold {
    std::uint64_t num = 3;
    std::uint64_t den = 5;

    [[nodiscard]] bool valid() const noexcept { return den > 0 && num > 0 && num <= den; }
    /// Accepts "3/5" or a decimal such as "0.6".
    static Threshold parse(std::string_view text);
    [[nodiscard]] std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

inline constexpr std::uint64_t kDefaultQuorum = 10;
inline constexpr std::string_view kApproveOption = "approve";

struct TallyResult {
    Digest round_id{};
    Digest subject_hash{};
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;
    bool passing = false;

    [[nodiscard]] Value to_value() const;
    static TallyResult from_value(const Value& v);
    [[nodiscard]] Digest digest() const { return canonical_hash(to_value()); }
    bool operator==(const TallyResult&) const = default;
};

/// total >= quorum and approve/total >= threshold (total > 0).
bool tally_passes(std::uint64_t approve, std::uint64_t total, std::uint64_t quorum, const Threshold& threshold);

struct RoundConfig {
    Digest subject_hash{};
    std::vector<std::string> options{"approve", "reject"};
    std::set<Address> eligible_voters;
    std::uint64_t quorum = kDefaultQuorum;
    Threshold threshold{};
};

enum class RoundState { Open, Closed };

struct VotingRound {
    Digest round_id{};
    RoundConfig config;
    RsaPublicKey registrar_key;
    std::string opened_by;
    std::int64_t opened_at = 0;
    RoundState state = RoundState::Open;
    std::set<Serial> used_serials;
    std::map<std::string, std::uint64_t> counts;
    std::optional<TallyResult> tally;

    [[nodiscard]] bool has_option(std::string_view option) const;
    [[nodiscard]] Value to_value() const;
};

/// Registrar-side issuance record. Holds the voter identity and nothing
/// derived from the ballot.
struct IssuanceRecord {
    Address voter{};
    std::int64_t issued_at = 0;

    [[nodiscard]] Value to_value() const;
};

/// Blind-signature voting rounds: the registrar signs blinded ballots for
/// eligible voters, and anyone holding a valid unblinded ballot may cast it
/// exactly once.
class VotingService {
public:
    VotingService(ledger::Ledger& ledger, const identity::Directory& directory);
    VotingService(const VotingService&) = delete;
    VotingService& operator=(const VotingService&) = delete;

    Digest open_round(const RoundConfig& config, const Credential& opener, unsigned key_bits, std::uint64_t key_seed);

    /// Registrar step. The caller is authenticated; the blinded value is
    /// signed and forgotten.
    BigInt request_token(const Digest& round_id, const Credential& voter, const BigInt& blinded);

    /// Anonymous step: returns the VoteCast event carrying the ballot.
    ledger::LedgerEvent cast_vote(const Digest& round_id, const BallotToken& ballot, const std::string& option);

    TallyResult close_and_tally(const Digest& round_id, const Credential& closer);

    [[nodiscard]] const VotingRound* find_round(const Digest& round_id) const;
    [[nodiscard]] const std::map<Digest, VotingRound>& rounds() const noexcept { return rounds_; }
    [[nodiscard]] const std::map<Address, IssuanceRecord>* issuance_log(const Digest& round_id) const;

    void apply(const ledger::LedgerEvent& event);
    [[nodiscard]] Value snapshot() const;

private:
    VotingRound& require_open(const Digest& round_id);

    ledger::Ledger& ledger_;
    const identity::Directory& directory_;
    std::map<Digest, VotingRound> rounds_;
    std::map<Digest, RsaKeyPair> registrar_keys_;
    std::map<Digest, std::map<Address, IssuanceRecord>> issuance_;
};

/// Recomputes a round's tally from on-ledger VoteRoundOpened / VoteCast
/// events alone. nullopt when the round was never opened on this chain.
std::optional<TallyResult> recount(std::span<const ledger::Block> chain, const Digest& round_id);

/// The tally recorded by the round's VoteRoundClosed event, if any.
std::optional<TallyResult> recorded_tally(std::span<const ledger::Block> chain, const Digest& round_id);

}  // namespace medalchain::vote
