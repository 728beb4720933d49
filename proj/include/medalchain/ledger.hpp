#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medalchain/canonical.hpp"
#include "medalchain/hash.hpp"

namespace medalchain::ledger {

enum class EventKind {
    DefinitionRegistered,
    TokenMinted,
    TokenCertified,
    TokenFrozen,
    TokenRevoked,
    RuleUpdated,
    VoteRoundOpened,
    VoteCast,
    VoteRoundClosed,
    ApplicationDecision,
    RecordLinked,
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept;

struct LedgerEvent {
    Digest id{};
    EventKind kind = EventKind::RecordLinked;
    Value payload;  // always a map
    std::string author;
    std::int64_t timestamp = 0;

    /// SHA-256 over the canonical encoding of everything except `id`.
    [[nodiscard]] Digest compute_id() const;
    [[nodiscard]] Value to_value() const;
    static LedgerEvent from_value(const Value& v);
};

LedgerEvent make_event(EventKind kind, Value payload, std::string author, std::int64_t timestamp);

struct BlockHeader {
    std::uint64_t height = 0;
    Digest prev_hash{};
    Digest merkle_root{};
    std::int64_t timestamp = 0;
    unsigned difficulty = 0;
    std::uint64_t nonce = 0;

    [[nodiscard]] Value to_value() const;
    [[nodiscard]] Digest hash() const;
    static BlockHeader from_value(const Value& v);
};

/// A sealed block. `hash` is the header hash recorded at sealing time; the
/// validator recomputes it, so any header edit is caught even at the tip.
struct Block {
    BlockHeader header;
    std::vector<LedgerEvent> events;
    Digest hash{};

    [[nodiscard]] Value to_value() const;
    [[nodiscard]] std::string encode() const { return canonical_encode(to_value()); }
    static Block from_value(const Value& v);
    /// Strict decode: the input must be the canonical encoding.
    static Block decode(std::string_view text);
    [[nodiscard]] std::vector<Digest> event_ids() const;
};

enum class Side { Left, Right };

struct ProofStep {
    Side side;  // where the sibling sits relative to the running hash
    Digest hash;
    bool operator==(const ProofStep&) const = default;
};

struct MerkleProof {
    std::size_t leaf_index = 0;
    std::vector<ProofStep> siblings;

    [[nodiscard]] Value to_value() const;
    static MerkleProof from_value(const Value& v);
};

Digest hash_pair(const Digest& left, const Digest& right);
Digest merkle_root(std::span<const Digest> leaves);
MerkleProof merkle_prove(std::span<const Digest> leaves, std::size_t leaf_index);
MerkleProof merkle_prove(const Block& block, std::size_t leaf_index);
bool verify_proof(const Digest& leaf, const MerkleProof& proof, const Digest& root);

inline constexpr unsigned kDefaultDifficulty = 8;
inline constexpr unsigned kMaxDifficulty = 24;

Block make_genesis();

/// Deterministic nonce search from zero.
Block mine_block(const BlockHeader& parent, std::vector<LedgerEvent> events, unsigned difficulty,
                 std::int64_t timestamp, unsigned max_difficulty = kMaxDifficulty);

enum class ChainFault { BadGenesis, BrokenLink, MerkleMismatch, InsufficientWork, BadHeight, TimestampRegression };

std::string_view to_string(ChainFault fault) noexcept;

struct ChainVerdict {
    std::optional<ChainFault> fault;
    std::uint64_t height = 0;

    [[nodiscard]] bool ok() const noexcept { return !fault.has_value(); }
};

ChainVerdict validate_chain(std::span<const Block> chain);

/// Sum of 2^difficulty over all blocks, saturating at UINT64_MAX.
std::uint64_t total_work(std::span<const Block> chain);

struct TraceEntry {
    std::uint64_t height;
    LedgerEvent event;
    MerkleProof proof;
};

/// Every committed event whose author or payload mentions `subject`
/// (a plain actor id or the lowercase hex of a 32-byte id), in chain order.
std::vector<TraceEntry> trace(std::span<const Block> chain, std::string_view subject);

// Chain file: a sequence of [u32 big-endian length][canonical block encoding].
void write_chain_record(std::ostream& out, const Block& block);
std::vector<Block> read_chain_records(std::istream& in);

// Export text: one canonical block per line, each line ending in '\n'.
std::string export_text(std::span<const Block> chain);
/// Strict inverse of export_text. SchemaViolation names the offending line.
std::vector<Block> import_text(std::string_view text);

/// Single-writer ledger: collects pending events and seals them into
/// blocks. Committed blocks are only reachable through const references.
class Ledger {
public:
    using Clock = std::function<std::int64_t()>;
    using EventObserver = std::function<void(const LedgerEvent&)>;
    using BlockObserver = std::function<void(const Block&)>;

    struct Options {
        unsigned difficulty = kDefaultDifficulty;
        std::size_t batch_size = 16;
    };

    Ledger(Options options, Clock clock);

    [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }
    [[nodiscard]] const std::vector<LedgerEvent>& pending() const noexcept { return pending_; }
    [[nodiscard]] const Block& tip() const noexcept { return blocks_.back(); }
    [[nodiscard]] Digest tip_hash() const noexcept { return blocks_.back().hash; }
    [[nodiscard]] std::int64_t now() const { return clock_(); }
    [[nodiscard]] const Options& options() const noexcept { return options_; }

    /// Appends one event. The ledger stamps a global sequence number into
    /// the payload under "seq" so that otherwise identical events stay
    /// distinct. Observers run before this returns.
    LedgerEvent append(EventKind kind, Value payload, std::string author);

    /// Seals a block when the batch threshold is reached. Callers that
    /// append a group of related events call this once after the group.
    void maybe_seal();

    /// Seals everything pending into one block; nullopt when nothing is pending.
    std::optional<Block> seal();

    void on_event(EventObserver observer) { event_observers_.push_back(std::move(observer)); }
    void on_block(BlockObserver observer) { block_observers_.push_back(std::move(observer)); }

    struct Location {
        std::uint64_t height;
        std::size_t index;
    };
    [[nodiscard]] std::optional<Location> locate(const Digest& event_id) const;
    [[nodiscard]] std::optional<MerkleProof> prove(const Digest& event_id) const;

    /// Committed events followed by pending ones.
    void for_each_event(const std::function<void(const LedgerEvent&)>& fn) const;
    [[nodiscard]] std::uint64_t event_count() const noexcept { return next_seq_; }

private:
    Options options_;
    Clock clock_;
    std::vector<Block> blocks_;
    std::vector<LedgerEvent> pending_;
    std::map<Digest, Location> index_;
    std::uint64_t next_seq_ = 0;
    std::vector<EventObserver> event_observers_;
    std::vector<BlockObserver> block_observers_;
};

}  // namespace medalchain::ledger
