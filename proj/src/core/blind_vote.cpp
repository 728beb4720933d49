#include "medalchain/blind_vote.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace medalchain::vote {

using ledger::EventKind;
using ledger::LedgerEvent;

namespace {

BigInt mod_pow(const BigInt& base, const BigInt& exp, const BigInt& mod) {
    BigInt out;
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
    return out;
}

BigInt gcd(const BigInt& a, const BigInt& b) {
    BigInt out;
    mpz_gcd(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return out;
}

std::optional<BigInt> mod_inverse(const BigInt& a, const BigInt& mod) {
    BigInt out;
    if (mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) return std::nullopt;
    return out;
}

bool probably_prime(const BigInt& x) { return mpz_probab_prime_p(x.get_mpz_t(), 30) > 0; }

std::size_t bit_length(const BigInt& x) { return x == 0 ? 0 : mpz_sizeinbase(x.get_mpz_t(), 2); }

Serial serial_from(const Value& v) {
    Bytes b = v.as_bytes();
    if (b.size() != 16) fail(ErrorCode::ParseError, "ballot serial must be 16 bytes");
    Serial s{};
    std::copy(b.begin(), b.end(), s.begin());
    return s;
}

Value counts_value(const std::map<std::string, std::uint64_t>& counts) {
    Value::Map m;
    for (const auto& [k, v] : counts) m.emplace(k, v);
    return m;
}

Value threshold_value(const Threshold& t) { return Value::Map{{"den", t.den}, {"num", t.num}}; }

Threshold threshold_from(const Value& v) { return {v.at("num").as_uint(), v.at("den").as_uint()}; }

}  // namespace

// --- encodings ------------------------------------------------------------

Value bigint_value(const BigInt& x) {
    if (x < 0) fail(ErrorCode::UnsupportedValue, "negative big integer");
    Bytes out((bit_length(x) + 7) / 8);
    if (!out.empty()) {
        std::size_t count = 0;
        mpz_export(out.data(), &count, 1, 1, 1, 0, x.get_mpz_t());
        out.resize(count);
    }
    return Value::bytes(out);
}

BigInt bigint_from_bytes(std::span<const std::uint8_t> bytes) {
    BigInt x = 0;
    if (!bytes.empty()) mpz_import(x.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
    return x;
}

BigInt bigint_from(const Value& v) { return bigint_from_bytes(v.as_bytes()); }

Value RsaPublicKey::to_value() const { return Value::Map{{"e", bigint_value(e)}, {"n", bigint_value(n)}}; }

RsaPublicKey RsaPublicKey::from_value(const Value& v) { return {bigint_from(v.at("n")), bigint_from(v.at("e"))}; }

Value RsaKeyPair::to_value() const {
    return Value::Map{{"d", bigint_value(d)}, {"e", bigint_value(e)}, {"n", bigint_value(n)},
                      {"p", bigint_value(p)}, {"q", bigint_value(q)}};
}

RsaKeyPair RsaKeyPair::from_value(const Value& v) {
    return {bigint_from(v.at("n")), bigint_from(v.at("e")), bigint_from(v.at("d")), bigint_from(v.at("p")),
            bigint_from(v.at("q"))};
}

// --- RSA ------------------------------------------------------------------

bool check_key(const RsaKeyPair& key) {
    if (key.p == key.q || key.p < 2 || key.q < 2) return false;
    if (!probably_prime(key.p) || !probably_prime(key.q)) return false;
    if (key.p * key.q != key.n) return false;
    const BigInt lambda = lcm(key.p - 1, key.q - 1);
    BigInt ed = key.e * key.d;
    BigInt r;
    mpz_mod(r.get_mpz_t(), ed.get_mpz_t(), lambda.get_mpz_t());
    return r == 1;
}

RsaKeyPair keygen(unsigned bits, std::uint64_t seed) {
    if (bits < kMinTestKeyBits) {
        fail(ErrorCode::KeyTooSmall, "key size " + std::to_string(bits) + " is below the " +
                                         std::to_string(kMinTestKeyBits) + "-bit floor");
    }
    gmp_randclass rng(gmp_randinit_mt);
    rng.seed(static_cast<unsigned long>(seed));
    const unsigned p_bits = bits / 2;
    const unsigned q_bits = bits - p_bits;

    auto random_prime = [&rng](unsigned k) {
        BigInt x = rng.get_z_bits(k);
        // top two bits set so the product reaches the full bit length
        mpz_setbit(x.get_mpz_t(), k - 1);
        mpz_setbit(x.get_mpz_t(), k - 2);
        BigInt prime;
        mpz_nextprime(prime.get_mpz_t(), x.get_mpz_t());
        return prime;
    };

    while (true) {
        RsaKeyPair key;
        key.p = random_prime(p_bits);
        key.q = random_prime(q_bits);
        if (key.p == key.q) continue;
        key.n = key.p * key.q;
        if (bit_length(key.n) != bits) continue;
        const BigInt lambda = lcm(key.p - 1, key.q - 1);
        key.e = 65537;
        while (gcd(key.e, lambda) != 1) key.e += 2;
        auto d = mod_inverse(key.e, lambda);
        if (!d) continue;
        key.d = *d;
        return key;
    }
}

BigInt blind(const BigInt& message, const BigInt& r, const RsaPublicKey& key) {
    if (message <= 0 || message >= key.n) fail(ErrorCode::MessageOutOfRange, "message must satisfy 0 < m < n");
    if (r <= 0 || gcd(r, key.n) != 1) fail(ErrorCode::BadBlindingFactor, "blinding factor must be coprime to n");
    BigInt out = message * mod_pow(r, key.e, key.n);
    mpz_mod(out.get_mpz_t(), out.get_mpz_t(), key.n.get_mpz_t());
    return out;
}

BigInt sign_blinded(const BigInt& blinded, const RsaKeyPair& key) {
    if (blinded < 0 || blinded >= key.n) fail(ErrorCode::MessageOutOfRange, "blinded value must be below n");
    return mod_pow(blinded, key.d, key.n);
}

BigInt unblind(const BigInt& blind_signature, const BigInt& r, const RsaPublicKey& key) {
    auto inv = mod_inverse(r, key.n);
    if (!inv || r <= 0) fail(ErrorCode::BadBlindingFactor, "blinding factor must be coprime to n");
    BigInt out = blind_signature * *inv;
    mpz_mod(out.get_mpz_t(), out.get_mpz_t(), key.n.get_mpz_t());
    return out;
}

bool verify_signature(const BigInt& message, const BigInt& signature, const RsaPublicKey& key) {
    if (signature < 0 || signature >= key.n) return false;
    BigInt m = message;
    mpz_mod(m.get_mpz_t(), m.get_mpz_t(), key.n.get_mpz_t());
    return mod_pow(signature, key.e, key.n) == m;
}

BigInt ballot_message(const Digest& round_id, const Serial& serial, const RsaPublicKey& key) {
    Sha256 h;
    h.update(std::string_view("ballot")).update(round_id).update(serial);
    const Digest digest = h.finish();
    BigInt m = bigint_from_bytes(digest);
    mpz_mod(m.get_mpz_t(), m.get_mpz_t(), key.n.get_mpz_t());
    return m;
}

// --- tallies --------------------------------------------------------------

Threshold Threshold::parse(std::string_view text) {
    Threshold t{0, 0};
    auto parse_u = [](std::string_view s, std::uint64_t& out) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
    };
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        if (!parse_u(text.substr(0, slash), t.num) || !parse_u(text.substr(slash + 1), t.den))
            fail(ErrorCode::InvalidConfig, "threshold must look like 3/5 or 0.6");
    } else {
        auto dot = text.find('.');
        std::string digits(text.substr(0, dot));
        std::uint64_t den = 1;
        if (dot != std::string_view::npos) {
            auto frac = text.substr(dot + 1);
            if (frac.size() > 9) fail(ErrorCode::InvalidConfig, "threshold has too many decimal places");
            digits += frac;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        }
        if (!parse_u(digits, t.num)) fail(ErrorCode::InvalidConfig, "threshold must look like 3/5 or 0.6");
        t.den = den;
    }
    if (t.den != 0) {
        const auto g = std::gcd(t.num, t.den);
        if (g > 0) {
            t.num /= g;
            t.den /= g;
        }
    }
    if (!t.valid()) fail(ErrorCode::InvalidConfig, "threshold must lie in (0, 1]");
    return t;
}

bool tally_passes(std::uint64_t approve, std::uint64_t total, std::uint64_t quorum, const Threshold& threshold) {
    if (total == 0 || total < quorum) return false;
    // approve/total >= num/den without floating point
    return static_cast<unsigned __int128>(approve) * threshold.den >=
           static_cast<unsigned __int128>(threshold.num) * total;
}

Value TallyResult::to_value() const {
    return Value::Map{{"counts", counts_value(counts)}, {"passing", passing}, {"round_id", Value(round_id)},
                      {"subject_hash", Value(subject_hash)}, {"total", total}};
}

TallyResult TallyResult::from_value(const Value& v) {
    TallyResult t;
    t.round_id = v.at("round_id").as_digest();
    t.subject_hash = v.at("subject_hash").as_digest();
    for (const auto& [k, c] : v.at("counts").as_map()) t.counts[k] = c.as_uint();
    t.total = v.at("total").as_uint();
    t.passing = v.at("passing").as_bool();
    return t;
}

bool VotingRound::has_option(std::string_view option) const {
    return std::find(config.options.begin(), config.options.end(), option) != config.options.end();
}

Value VotingRound::to_value() const {
    Value::List opts(config.options.begin(), config.options.end());
    Value::List voters, serials;
    for (const auto& v : config.eligible_voters) voters.push_back(Value(v));
    for (const auto& s : used_serials) serials.push_back(Value::bytes(s));
    Value v = Value::Map{
        {"round_id", Value(round_id)},
        {"subject_hash", Value(config.subject_hash)},
        {"options", std::move(opts)},
        {"eligible_voters", std::move(voters)},
        {"quorum", config.quorum},
        {"threshold", threshold_value(config.threshold)},
        {"registrar_key", registrar_key.to_value()},
        {"opened_by", opened_by},
        {"opened_at", opened_at},
        {"state", state == RoundState::Open ? "Open" : "Closed"},
        {"used_serials", std::move(serials)},
        {"counts", counts_value(counts)},
    };
    if (tally) v["tally"] = tally->to_value();
    return v;
}

Value IssuanceRecord::to_value() const { return Value::Map{{"issued_at", issued_at}, {"voter", Value(voter)}}; }

// --- service --------------------------------------------------------------

VotingService::VotingService(ledger::Ledger& ledger, const identity::Directory& directory)
    : ledger_(ledger), directory_(directory) {
    ledger_.on_event([this](const LedgerEvent& e) { apply(e); });
}

Digest VotingService::open_round(const RoundConfig& config, const Credential& opener, unsigned key_bits,
                                 std::uint64_t key_seed) {
    if (opener.role == identity::Role::User || !directory_.contains(opener.actor_id))
        fail(ErrorCode::Unauthorized, "only platforms or the authority may open voting rounds");
    if (config.options.size() < 2) fail(ErrorCode::SchemaViolation, "a round needs at least two options");
    std::set<std::string_view> distinct(config.options.begin(), config.options.end());
    if (distinct.size() != config.options.size()) fail(ErrorCode::SchemaViolation, "duplicate option");
    if (config.quorum < 1) fail(ErrorCode::SchemaViolation, "quorum must be at least 1");
    if (!config.threshold.valid()) fail(ErrorCode::SchemaViolation, "threshold must lie in (0, 1]");

    RsaKeyPair key = keygen(key_bits, key_seed);
    Value::List opts(config.options.begin(), config.options.end());
    Value::List voters;
    for (const auto& v : config.eligible_voters) voters.push_back(Value(v));
    Value descriptor = Value::Map{
        {"subject_hash", Value(config.subject_hash)},
        {"options", std::move(opts)},
        {"eligible_voters", std::move(voters)},
        {"quorum", config.quorum},
        {"threshold", threshold_value(config.threshold)},
        {"registrar_key", key.public_key().to_value()},
        {"opened_by", opener.actor_id},
        {"opened_at", ledger_.now()},
        {"opened_seq", ledger_.event_count()},
    };
    const Digest round_id = canonical_hash(descriptor);
    registrar_keys_.emplace(round_id, std::move(key));
    issuance_[round_id];
    descriptor["round_id"] = Value(round_id);
    ledger_.append(EventKind::VoteRoundOpened, std::move(descriptor), opener.actor_id);
    ledger_.maybe_seal();
    return round_id;
}

VotingRound& VotingService::require_open(const Digest& round_id) {
    auto it = rounds_.find(round_id);
    if (it == rounds_.end()) fail(ErrorCode::UnknownRound, "unknown round " + to_hex(round_id));
    if (it->second.state != RoundState::Open) fail(ErrorCode::RoundClosed, "round is closed");
    return it->second;
}

BigInt VotingService::request_token(const Digest& round_id, const Credential& voter, const BigInt& blinded) {
    auto& round = require_open(round_id);
    const Address address = voter.address();
    if (!round.config.eligible_voters.contains(address)) fail(ErrorCode::NotEligible, "voter is not eligible for this round");
    auto& log = issuance_[round_id];
    if (log.contains(address)) fail(ErrorCode::AlreadyIssued, "a ballot token was already issued to this voter");
    BigInt signed_blinded = sign_blinded(blinded, registrar_keys_.at(round_id));
    log.emplace(address, IssuanceRecord{address, ledger_.now()});
    return signed_blinded;
}

LedgerEvent VotingService::cast_vote(const Digest& round_id, const BallotToken& ballot, const std::string& option) {
    auto& round = require_open(round_id);
    if (!round.has_option(option)) fail(ErrorCode::UnknownOption, "unknown option '" + option + "'");
    const BigInt m = ballot_message(round_id, ballot.serial, round.registrar_key);
    if (!verify_signature(m, ballot.signature, round.registrar_key))
        fail(ErrorCode::InvalidSignature, "ballot signature does not verify");
    if (round.used_serials.contains(ballot.serial)) fail(ErrorCode::DuplicateSerial, "ballot serial already used");
    LedgerEvent e = ledger_.append(EventKind::VoteCast,
                                   Value::Map{
                                       {"round_id", Value(round_id)},
                                       {"serial", Value::bytes(ballot.serial)},
                                       {"option", option},
                                       {"signature", bigint_value(ballot.signature)},
                                   },
                                   "anonymous");
    ledger_.maybe_seal();
    return e;
}

TallyResult VotingService::close_and_tally(const Digest& round_id, const Credential& closer) {
    auto& round = require_open(round_id);
    if (closer.actor_id != round.opened_by && !closer.is_authority())
        fail(ErrorCode::Unauthorized, "only the round opener or the authority may close it");
    TallyResult t;
    t.round_id = round_id;
    t.subject_hash = round.config.subject_hash;
    for (const auto& opt : round.config.options) t.counts[opt] = 0;
    for (const auto& [opt, c] : round.counts) {
        t.counts[opt] = c;
        t.total += c;
    }
    const auto approve = t.counts.contains(std::string(kApproveOption)) ? t.counts.at(std::string(kApproveOption)) : 0;
    t.passing = tally_passes(approve, t.total, round.config.quorum, round.config.threshold);

    Value payload = t.to_value();
    payload["tally_digest"] = Value(t.digest());
    ledger_.append(EventKind::VoteRoundClosed, std::move(payload), closer.actor_id);
    ledger_.maybe_seal();
    return t;
}

const VotingRound* VotingService::find_round(const Digest& round_id) const {
    auto it = rounds_.find(round_id);
    return it == rounds_.end() ? nullptr : &it->second;
}

const std::map<Address, IssuanceRecord>* VotingService::issuance_log(const Digest& round_id) const {
    auto it = issuance_.find(round_id);
    return it == issuance_.end() ? nullptr : &it->second;
}

void VotingService::apply(const LedgerEvent& e) {
    const Value& p = e.payload;
    switch (e.kind) {
        case EventKind::VoteRoundOpened: {
            VotingRound r;
            r.round_id = p.at("round_id").as_digest();
            r.config.subject_hash = p.at("subject_hash").as_digest();
            r.config.options.clear();
            for (const auto& o : p.at("options").as_list()) r.config.options.push_back(o.as_string());
            for (const auto& v : p.at("eligible_voters").as_list()) r.config.eligible_voters.insert(v.as_digest());
            r.config.quorum = p.at("quorum").as_uint();
            r.config.threshold = threshold_from(p.at("threshold"));
            r.registrar_key = RsaPublicKey::from_value(p.at("registrar_key"));
            r.opened_by = p.at("opened_by").as_string();
            r.opened_at = p.at("opened_at").as_int();
            rounds_.insert_or_assign(r.round_id, std::move(r));
            break;
        }
        case EventKind::VoteCast: {
            auto& r = rounds_.at(p.at("round_id").as_digest());
            r.used_serials.insert(serial_from(p.at("serial")));
            ++r.counts[p.at("option").as_string()];
            break;
        }
        case EventKind::VoteRoundClosed: {
            auto& r = rounds_.at(p.at("round_id").as_digest());
            r.state = RoundState::Closed;
            r.tally = TallyResult::from_value(p);
            break;
        }
        default:
            break;
    }
}

Value VotingService::snapshot() const {
    Value::List rounds;
    for (const auto& [id, r] : rounds_) {
        Value v = r.to_value();
        if (auto k = registrar_keys_.find(id); k != registrar_keys_.end()) v["registrar_private"] = k->second.to_value();
        Value::List log;
        if (auto l = issuance_.find(id); l != issuance_.end())
            for (const auto& [addr, rec] : l->second) log.push_back(rec.to_value());
        v["issuance_log"] = std::move(log);
        rounds.push_back(std::move(v));
    }
    return rounds;
}

// --- public recount ---------------------------------------------------------

std::optional<TallyResult> recount(std::span<const ledger::Block> chain, const Digest& round_id) {
    std::optional<TallyResult> t;
    std::uint64_t quorum = 0;
    Threshold threshold;
    const Value rid(round_id);
    for (const auto& block : chain) {
        for (const auto& e : block.events) {
            const auto* id = e.payload.find("round_id");
            if (id == nullptr || id->as_bytes() != rid.as_bytes()) continue;
            if (e.kind == EventKind::VoteRoundOpened) {
                t.emplace();
                t->round_id = round_id;
                t->subject_hash = e.payload.at("subject_hash").as_digest();
                for (const auto& o : e.payload.at("options").as_list()) t->counts[o.as_string()] = 0;
                quorum = e.payload.at("quorum").as_uint();
                threshold = threshold_from(e.payload.at("threshold"));
            } else if (e.kind == EventKind::VoteCast && t) {
                ++t->counts[e.payload.at("option").as_string()];
                ++t->total;
            }
        }
    }
    if (t) {
        const std::string approve(kApproveOption);
        const auto a = t->counts.contains(approve) ? t->counts.at(approve) : 0;
        t->passing = tally_passes(a, t->total, quorum, threshold);
    }
    return t;
}

std::optional<TallyResult> recorded_tally(std::span<const ledger::Block> chain, const Digest& round_id) {
    const Value rid(round_id);
    for (const auto& block : chain)
        for (const auto& e : block.events)
            if (e.kind == EventKind::VoteRoundClosed && e.payload.at("round_id").as_bytes() == rid.as_bytes())
                return TallyResult::from_value(e.payload);
    return std::nullopt;
}

}  // namespace medalchain::vote
