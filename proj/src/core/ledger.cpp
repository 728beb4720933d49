#include "medalchain/ledger.hpp"

#include <array>
#include <limits>

namespace medalchain::ledger {

namespace {

constexpr std::array<std::string_view, 11> kKindNames = {
    "DefinitionRegistered", "TokenMinted",     "TokenCertified", "TokenFrozen",
    "TokenRevoked",         "RuleUpdated",     "VoteRoundOpened", "VoteCast",
    "VoteRoundClosed",      "ApplicationDecision", "RecordLinked",
};

Value event_body(const LedgerEvent& e) {
    return Value::Map{
        {"author", e.author},
        {"kind", std::string(to_string(e.kind))},
        {"payload", e.payload},
        {"timestamp", e.timestamp},
    };
}

bool mentions(const Value& v, std::string_view subject) {
    return std::visit(
        [subject](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return x == subject;
            } else if constexpr (std::is_same_v<T, ByteString>) {
                return to_hex(x.data) == subject;
            } else if constexpr (std::is_same_v<T, Value::List>) {
                for (const auto& item : x)
                    if (mentions(item, subject)) return true;
                return false;
            } else if constexpr (std::is_same_v<T, Value::Map>) {
                for (const auto& [k, item] : x)
                    if (mentions(item, subject)) return true;
                return false;
            } else {
                return false;
            }
        },
        v.storage());
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == name) return static_cast<EventKind>(i);
    return std::nullopt;
}

std::string_view to_string(ChainFault fault) noexcept {
    switch (fault) {
        case ChainFault::BadGenesis: return "BadGenesis";
        case ChainFault::BrokenLink: return "BrokenLink";
        case ChainFault::MerkleMismatch: return "MerkleMismatch";
        case ChainFault::InsufficientWork: return "InsufficientWork";
        case ChainFault::BadHeight: return "BadHeight";
        case ChainFault::TimestampRegression: return "TimestampRegression";
    }
    return "Unknown";
}

// --- events ---------------------------------------------------------------

Digest LedgerEvent::compute_id() const { return canonical_hash(event_body(*this)); }

Value LedgerEvent::to_value() const {
    Value v = event_body(*this);
    v["id"] = Value(id);
    return v;
}

LedgerEvent LedgerEvent::from_value(const Value& v) {
    if (v.as_map().size() != 5) fail(ErrorCode::ParseError, "event has unexpected fields");
    LedgerEvent e;
    e.id = v.at("id").as_digest();
    auto kind = event_kind_from_string(v.at("kind").as_string());
    if (!kind) fail(ErrorCode::ParseError, "unknown event kind");
    e.kind = *kind;
    e.payload = v.at("payload");
    (void)e.payload.as_map();
    e.author = v.at("author").as_string();
    e.timestamp = v.at("timestamp").as_int();
    return e;
}

LedgerEvent make_event(EventKind kind, Value payload, std::string author, std::int64_t timestamp) {
    if (!payload.is_map()) fail(ErrorCode::UnsupportedValue, "event payload must be a map");
    LedgerEvent e{Digest{}, kind, std::move(payload), std::move(author), timestamp};
    e.id = e.compute_id();
    return e;
}

// --- headers and blocks ---------------------------------------------------

Value BlockHeader::to_value() const {
    return Value::Map{
        {"difficulty", difficulty}, {"height", height},       {"merkle_root", Value(merkle_root)},
        {"nonce", nonce},           {"prev_hash", Value(prev_hash)}, {"timestamp", timestamp},
    };
}

Digest BlockHeader::hash() const { return canonical_hash(to_value()); }

BlockHeader BlockHeader::from_value(const Value& v) {
    if (v.as_map().size() != 6) fail(ErrorCode::ParseError, "header has unexpected fields");
    BlockHeader h;
    h.height = v.at("height").as_uint();
    h.prev_hash = v.at("prev_hash").as_digest();
    h.merkle_root = v.at("merkle_root").as_digest();
    h.timestamp = v.at("timestamp").as_int();
    auto d = v.at("difficulty").as_uint();
    if (d > 256) fail(ErrorCode::ParseError, "difficulty out of range");
    h.difficulty = static_cast<unsigned>(d);
    h.nonce = v.at("nonce").as_uint();
    return h;
}

Value Block::to_value() const {
    Value::List list;
    list.reserve(events.size());
    for (const auto& e : events) list.push_back(e.to_value());
    return Value::Map{{"events", std::move(list)}, {"hash", Value(hash)}, {"header", header.to_value()}};
}

Block Block::from_value(const Value& v) {
    if (v.as_map().size() != 3) fail(ErrorCode::ParseError, "block has unexpected fields");
    Block b;
    b.header = BlockHeader::from_value(v.at("header"));
    b.hash = v.at("hash").as_digest();
    for (const auto& e : v.at("events").as_list()) b.events.push_back(LedgerEvent::from_value(e));
    return b;
}

Block Block::decode(std::string_view text) { return from_value(parse_canonical(text)); }

std::vector<Digest> Block::event_ids() const {
    std::vector<Digest> ids;
    ids.reserve(events.size());
    for (const auto& e : events) ids.push_back(e.id);
    return ids;
}

Value MerkleProof::to_value() const {
    Value::List steps;
    for (const auto& s : siblings) {
        steps.push_back(Value::Map{{"hash", Value(s.hash)}, {"side", s.side == Side::Left ? "left" : "right"}});
    }
    return Value::Map{{"leaf_index", leaf_index}, {"siblings", std::move(steps)}};
}

MerkleProof MerkleProof::from_value(const Value& v) {
    MerkleProof p;
    p.leaf_index = v.at("leaf_index").as_uint();
    for (const auto& s : v.at("siblings").as_list()) {
        const auto& side = s.at("side").as_string();
        if (side != "left" && side != "right") fail(ErrorCode::ParseError, "bad proof side");
        p.siblings.push_back({side == "left" ? Side::Left : Side::Right, s.at("hash").as_digest()});
    }
    return p;
}

// --- merkle ---------------------------------------------------------------

Digest hash_pair(const Digest& left, const Digest& right) {
    Sha256 h;
    h.update(left).update(right);
    return h.finish();
}

Digest merkle_root(std::span<const Digest> leaves) {
    if (leaves.empty()) return sha256(std::string_view{});
    std::vector<Digest> level(leaves.begin(), leaves.end());
    while (level.size() > 1) {
        if (level.size() % 2 == 1) level.push_back(level.back());
        std::vector<Digest> next;
        next.reserve(level.size() / 2);
        for (std::size_t i = 0; i < level.size(); i += 2) next.push_back(hash_pair(level[i], level[i + 1]));
        level = std::move(next);
    }
    return level.front();
}

MerkleProof merkle_prove(std::span<const Digest> leaves, std::size_t leaf_index) {
    if (leaf_index >= leaves.size()) {
        fail(ErrorCode::IndexOutOfRange,
             "leaf index " + std::to_string(leaf_index) + " out of range for " + std::to_string(leaves.size()) + " leaves");
    }
    MerkleProof proof{leaf_index, {}};
    std::vector<Digest> level(leaves.begin(), leaves.end());
    std::size_t pos = leaf_index;
    while (level.size() > 1) {
        if (level.size() % 2 == 1) level.push_back(level.back());
        if (pos % 2 == 0) {
            proof.siblings.push_back({Side::Right, level[pos + 1]});
        } else {
            proof.siblings.push_back({Side::Left, level[pos - 1]});
        }
        std::vector<Digest> next;
        next.reserve(level.size() / 2);
        for (std::size_t i = 0; i < level.size(); i += 2) next.push_back(hash_pair(level[i], level[i + 1]));
        level = std::move(next);
        pos /= 2;
    }
    return proof;
}

MerkleProof merkle_prove(const Block& block, std::size_t leaf_index) {
    auto ids = block.event_ids();
    return merkle_prove(ids, leaf_index);
}

bool verify_proof(const Digest& leaf, const MerkleProof& proof, const Digest& root) {
    Digest acc = leaf;
    for (const auto& step : proof.siblings) {
        acc = step.side == Side::Left ? hash_pair(step.hash, acc) : hash_pair(acc, step.hash);
    }
    return acc == root;
}

// --- mining ---------------------------------------------------------------

Block make_genesis() {
    Block g;
    g.header.merkle_root = merkle_root({});
    g.hash = g.header.hash();
    return g;
}

Block mine_block(const BlockHeader& parent, std::vector<LedgerEvent> events, unsigned difficulty,
                 std::int64_t timestamp, unsigned max_difficulty) {
    if (difficulty > max_difficulty) {
        fail(ErrorCode::DifficultyOutOfRange,
             "difficulty " + std::to_string(difficulty) + " exceeds bound " + std::to_string(max_difficulty));
    }
    if (events.empty()) fail(ErrorCode::EmptyBlock, "a mined block needs at least one event");

    Block block;
    block.events = std::move(events);
    block.header.height = parent.height + 1;
    block.header.prev_hash = parent.hash();
    block.header.merkle_root = merkle_root(block.event_ids());
    block.header.timestamp = timestamp;
    block.header.difficulty = difficulty;

    // The nonce is the only varying field; split the encoding around it.
    const std::string encoded = canonical_encode(block.header.to_value());
    const std::string marker = ",\"nonce\":0,";
    const auto at = encoded.find(marker);
    const std::string prefix = encoded.substr(0, at) + ",\"nonce\":";
    const std::string suffix = encoded.substr(at + marker.size() - 1);

    std::uint64_t nonce = 0;
    while (true) {
        Sha256 h;
        h.update(prefix).update(std::to_string(nonce)).update(suffix);
        Digest digest = h.finish();
        if (leading_zero_bits(digest) >= difficulty) {
            block.header.nonce = nonce;
            block.hash = digest;
            return block;
        }
        if (nonce == std::numeric_limits<std::uint64_t>::max()) break;
        ++nonce;
    }
    fail(ErrorCode::NonceExhausted, "no nonce satisfies the difficulty");
}

// --- validation -----------------------------------------------------------

ChainVerdict validate_chain(std::span<const Block> chain) {
    if (chain.empty()) return {ChainFault::BadGenesis, 0};
    static const Block genesis = make_genesis();
    const Block& g = chain.front();
    if (g.encode() != genesis.encode()) return {ChainFault::BadGenesis, 0};

    for (std::size_t i = 1; i < chain.size(); ++i) {
        const Block& prev = chain[i - 1];
        const Block& b = chain[i];
        const auto height = b.header.height;
        if (height != prev.header.height + 1) return {ChainFault::BadHeight, static_cast<std::uint64_t>(i)};
        if (b.header.prev_hash != prev.header.hash()) return {ChainFault::BrokenLink, height};
        const Digest recomputed = b.header.hash();
        if (recomputed != b.hash) return {ChainFault::BrokenLink, height};
        if (leading_zero_bits(recomputed) < b.header.difficulty) return {ChainFault::InsufficientWork, height};
        if (b.events.empty()) return {ChainFault::MerkleMismatch, height};
        for (const auto& e : b.events)
            if (e.compute_id() != e.id) return {ChainFault::MerkleMismatch, height};
        if (merkle_root(b.event_ids()) != b.header.merkle_root) return {ChainFault::MerkleMismatch, height};
        if (b.header.timestamp < prev.header.timestamp) return {ChainFault::TimestampRegression, height};
    }
    return {};
}

std::uint64_t total_work(std::span<const Block> chain) {
    std::uint64_t work = 0;
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    for (const auto& b : chain) {
        if (b.header.difficulty >= 64) return kMax;
        const std::uint64_t w = std::uint64_t{1} << b.header.difficulty;
        if (kMax - work < w) return kMax;
        work += w;
    }
    return work;
}

std::vector<TraceEntry> trace(std::span<const Block> chain, std::string_view subject) {
    std::vector<TraceEntry> out;
    for (const auto& block : chain) {
        std::vector<Digest> ids;
        for (std::size_t i = 0; i < block.events.size(); ++i) {
            const auto& e = block.events[i];
            if (e.author == subject || mentions(e.payload, subject)) {
                if (ids.empty()) ids = block.event_ids();
                out.push_back({block.header.height, e, merkle_prove(ids, i)});
            }
        }
    }
    return out;
}

// --- chain file -----------------------------------------------------------

void write_chain_record(std::ostream& out, const Block& block) {
    const std::string body = block.encode();
    const auto n = static_cast<std::uint32_t>(body.size());
    const char len[4] = {static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
                         static_cast<char>(n)};
    out.write(len, 4);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

std::string export_text(std::span<const Block> chain) {
    std::string out;
    for (const auto& b : chain) {
        out += b.encode();
        out += '\n';
    }
    return out;
}

std::vector<Block> import_text(std::string_view text) {
    std::vector<Block> chain;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        if (nl == std::string_view::npos) fail(ErrorCode::SchemaViolation, "line " + std::to_string(line_no) + ": missing newline");
        try {
            chain.push_back(Block::decode(text.substr(0, nl)));
        } catch (const Error& e) {
            fail(ErrorCode::SchemaViolation, "line " + std::to_string(line_no) + ": " + e.what());
        }
        text.remove_prefix(nl + 1);
    }
    return chain;
}

std::vector<Block> read_chain_records(std::istream& in) {
    std::vector<Block> blocks;
    while (true) {
        unsigned char len[4];
        in.read(reinterpret_cast<char*>(len), 4);
        if (in.gcount() == 0) break;
        if (in.gcount() != 4) fail(ErrorCode::CorruptLog, "truncated chain record length");
        const std::uint32_t n = (std::uint32_t{len[0]} << 24) | (std::uint32_t{len[1]} << 16) |
                                (std::uint32_t{len[2]} << 8) | std::uint32_t{len[3]};
        std::string body(n, '\0');
        in.read(body.data(), n);
        if (static_cast<std::uint32_t>(in.gcount()) != n) fail(ErrorCode::CorruptLog, "truncated chain record");
        try {
            blocks.push_back(Block::decode(body));
        } catch (const Error& e) {
            fail(ErrorCode::CorruptLog, "chain record " + std::to_string(blocks.size()) + ": " + e.what());
        }
    }
    return blocks;
}

// --- ledger ---------------------------------------------------------------

Ledger::Ledger(Options options, Clock clock) : options_(options), clock_(std::move(clock)) {
    if (options_.difficulty > kMaxDifficulty) fail(ErrorCode::DifficultyOutOfRange, "ledger difficulty out of range");
    if (options_.batch_size == 0) options_.batch_size = 1;
    blocks_.push_back(make_genesis());
}

LedgerEvent Ledger::append(EventKind kind, Value payload, std::string author) {
    if (!payload.is_map()) fail(ErrorCode::UnsupportedValue, "event payload must be a map");
    payload["seq"] = next_seq_;
    LedgerEvent e = make_event(kind, std::move(payload), std::move(author), clock_());
    ++next_seq_;
    pending_.push_back(e);
    for (const auto& obs : event_observers_) obs(e);
    return e;
}

void Ledger::maybe_seal() {
    if (pending_.size() >= options_.batch_size) seal();
}

std::optional<Block> Ledger::seal() {
    if (pending_.empty()) return std::nullopt;
    const auto ts = std::max(clock_(), tip().header.timestamp);
    Block block = mine_block(tip().header, std::move(pending_), options_.difficulty, ts);
    pending_.clear();
    for (std::size_t i = 0; i < block.events.size(); ++i) index_[block.events[i].id] = {block.header.height, i};
    blocks_.push_back(std::move(block));
    for (const auto& obs : block_observers_) obs(blocks_.back());
    return blocks_.back();
}

std::optional<Ledger::Location> Ledger::locate(const Digest& event_id) const {
    auto it = index_.find(event_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<MerkleProof> Ledger::prove(const Digest& event_id) const {
    auto loc = locate(event_id);
    if (!loc) return std::nullopt;
    return merkle_prove(blocks_[loc->height], loc->index);
}

void Ledger::for_each_event(const std::function<void(const LedgerEvent&)>& fn) const {
    for (const auto& b : blocks_)
        for (const auto& e : b.events) fn(e);
    for (const auto& e : pending_) fn(e);
}

}  // namespace medalchain::ledger
