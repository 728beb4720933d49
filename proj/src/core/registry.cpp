#include "medalchain/registry.hpp"

#include <algorithm>

namespace medalchain::registry {

using ledger::EventKind;
using ledger::LedgerEvent;

namespace {

std::size_t utf8_length(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xc0) != 0x80; }));
}

void put_be(Sha256& h, std::uint64_t v, int width) {
    std::uint8_t buf[8];
    for (int i = 0; i < width; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * (width - 1 - i)));
    h.update(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(width)));
}

constexpr std::array<std::string_view, 4> kStatusNames = {"PlatformIssued", "Certified", "Frozen", "Revoked"};

}  // namespace

std::string_view to_string(TokenStatus status) noexcept { return kStatusNames[static_cast<std::size_t>(status)]; }

std::string_view to_string(TokenAction action) noexcept {
    switch (action) {
        case TokenAction::Certify: return "Certify";
        case TokenAction::Freeze: return "Freeze";
        case TokenAction::Restore: return "Restore";
        case TokenAction::Revoke: return "Revoke";
    }
    return "?";
}

std::optional<TokenStatus> next_status(TokenStatus status, TokenAction action) noexcept {
    switch (status) {
        case TokenStatus::PlatformIssued:
            if (action == TokenAction::Certify) return TokenStatus::Certified;
            if (action == TokenAction::Freeze) return TokenStatus::Frozen;
            if (action == TokenAction::Revoke) return TokenStatus::Revoked;
            return std::nullopt;
        case TokenStatus::Certified:
            if (action == TokenAction::Freeze) return TokenStatus::Frozen;
            if (action == TokenAction::Revoke) return TokenStatus::Revoked;
            return std::nullopt;
        case TokenStatus::Frozen:
            if (action == TokenAction::Restore) return TokenStatus::Certified;
            if (action == TokenAction::Revoke) return TokenStatus::Revoked;
            return std::nullopt;
        case TokenStatus::Revoked:
            return std::nullopt;
    }
    return std::nullopt;
}

// --- metadata -------------------------------------------------------------

Value BadgeMetadata::to_value() const {
    Value::List grades(grade_levels.begin(), grade_levels.end());
    return Value::Map{
        {"criteria", criteria}, {"description", description}, {"grade_levels", std::move(grades)},
        {"icon", Value(icon)},  {"name", name},
    };
}

BadgeMetadata BadgeMetadata::from_value(const Value& v) {
    BadgeMetadata m;
    m.name = v.at("name").as_string();
    m.icon = v.at("icon").as_digest();
    m.description = v.at("description").as_string();
    m.criteria = v.at("criteria").as_string();
    for (const auto& g : v.at("grade_levels").as_list()) m.grade_levels.push_back(g.as_string());
    return m;
}

bool BadgeDefinition::has_grade(std::string_view grade) const {
    return std::find(metadata.grade_levels.begin(), metadata.grade_levels.end(), grade) != metadata.grade_levels.end();
}

Value BadgeDefinition::to_value() const {
    Value v = metadata.to_value();
    v["definition_id"] = Value(definition_id);
    v["issuer"] = issuer;
    v["created_at"] = created_at;
    return v;
}

Digest definition_id_for(const BadgeMetadata& metadata, std::string_view issuer) {
    Value v = metadata.to_value();
    v["issuer"] = std::string(issuer);
    return canonical_hash(v);
}

void check_metadata(const BadgeMetadata& m) {
    if (m.name.empty() || utf8_length(m.name) > kMaxNameChars)
        fail(ErrorCode::SchemaViolation, "name must be 1.." + std::to_string(kMaxNameChars) + " characters");
    if (utf8_length(m.description) > kMaxDescriptionChars)
        fail(ErrorCode::SchemaViolation, "description exceeds " + std::to_string(kMaxDescriptionChars) + " characters");
    if (m.grade_levels.empty()) fail(ErrorCode::SchemaViolation, "grade_levels must not be empty");
    std::set<std::string_view> seen;
    for (const auto& g : m.grade_levels) {
        if (g.empty()) fail(ErrorCode::SchemaViolation, "grade level names must not be empty");
        if (!seen.insert(g).second) fail(ErrorCode::SchemaViolation, "duplicate grade level '" + g + "'");
    }
    // reject content the canonical encoder cannot hash
    (void)canonical_encode(m.to_value());
}

// --- tokens ---------------------------------------------------------------

Value BadgeToken::to_value() const {
    Value v = Value::Map{
        {"token_id", Value(token_id)},
        {"definition_id", Value(definition_id)},
        {"holder", Value(holder)},
        {"grade", grade},
        {"issuer", issuer},
        {"status", std::string(to_string(status))},
        {"minted_at", minted_at},
        {"award_index", award_index},
    };
    if (official_description) v["official_description"] = *official_description;
    if (certified_at) v["certified_at"] = *certified_at;
    return v;
}

Digest token_id_for(const Digest& definition_id, const Address& holder, std::int64_t minted_at,
                    std::string_view issuer, std::string_view grade, std::uint32_t award_index) {
    static constexpr std::uint8_t kSep[1] = {0};
    Sha256 h;
    h.update(definition_id).update(holder);
    put_be(h, static_cast<std::uint64_t>(minted_at), 8);
    h.update(issuer).update(kSep).update(grade).update(kSep);
    put_be(h, award_index, 4);
    return h.finish();
}

bool VerificationReport::all_proofs_ok() const {
    return std::all_of(history.begin(), history.end(), [](const CitedEvent& c) { return c.proof_ok; });
}

Value VerificationReport::to_value() const {
    Value v = Value::Map{{"exists", exists}, {"certified", certified}};
    if (!token) return v;
    v["token"] = token->to_value();
    v["status"] = std::string(to_string(token->status));
    v["holder"] = Value(token->holder);
    v["issuer"] = token->issuer;
    v["pending_events"] = pending_events;
    v["all_proofs_ok"] = all_proofs_ok();
    Value::List cited;
    for (const auto& c : history) {
        cited.push_back(Value::Map{
            {"height", c.height},
            {"event", c.event.to_value()},
            {"proof", c.proof.to_value()},
            {"block_root", Value(c.block_root)},
            {"proof_ok", c.proof_ok},
        });
    }
    v["inclusion_proofs"] = std::move(cited);
    return v;
}

// --- registry -------------------------------------------------------------

BadgeRegistry::BadgeRegistry(ledger::Ledger& ledger, const identity::Directory& directory)
    : ledger_(ledger), directory_(directory) {
    ledger_.on_event([this](const LedgerEvent& e) { apply(e); });
}

Digest BadgeRegistry::register_definition(const BadgeMetadata& metadata, const Credential& issuer) {
    if (issuer.role != identity::Role::Platform || !directory_.contains(issuer.actor_id))
        fail(ErrorCode::UnknownIssuer, "'" + issuer.actor_id + "' is not a registered platform");
    check_metadata(metadata);
    const Digest id = definition_id_for(metadata, issuer.actor_id);
    if (definitions_.contains(id)) return id;

    Value payload = metadata.to_value();
    payload["definition_id"] = Value(id);
    payload["issuer"] = issuer.actor_id;
    payload["created_at"] = ledger_.now();
    ledger_.append(EventKind::DefinitionRegistered, std::move(payload), issuer.actor_id);
    ledger_.maybe_seal();
    return id;
}

BadgeToken BadgeRegistry::mint_token(const Digest& definition_id, const Address& holder, const std::string& grade,
                                     const Credential& issuer) {
    const auto* def = find_definition(definition_id);
    if (def == nullptr) fail(ErrorCode::UnknownDefinition, "unknown definition " + to_hex(definition_id));
    if (!def->has_grade(grade)) fail(ErrorCode::BadGrade, "grade '" + grade + "' is not defined for this badge");
    if (issuer.actor_id != def->issuer || issuer.role != identity::Role::Platform)
        fail(ErrorCode::IssuerMismatch, "only '" + def->issuer + "' may mint this badge");
    AwardKey key{definition_id, holder, grade};
    if (live_awards_.contains(key)) fail(ErrorCode::DuplicateAward, "holder already has a live award of this badge and grade");

    const auto minted_at = ledger_.now();
    const auto award_index = award_counts_.contains(key) ? award_counts_.at(key) : 0u;
    const Digest token_id = token_id_for(definition_id, holder, minted_at, issuer.actor_id, grade, award_index);
    Value payload = Value::Map{
        {"token_id", Value(token_id)}, {"definition_id", Value(definition_id)},
        {"holder", Value(holder)},     {"grade", grade},
        {"issuer", issuer.actor_id},   {"minted_at", minted_at},
        {"award_index", award_index},
    };
    ledger_.append(EventKind::TokenMinted, std::move(payload), issuer.actor_id);
    BadgeToken token = tokens_.at(token_id);
    ledger_.maybe_seal();
    return token;
}

VerificationReport BadgeRegistry::verify_token(const Digest& token_id) const {
    VerificationReport report;
    const auto* token = find_token(token_id);
    if (token == nullptr) return report;
    report.exists = true;
    report.token = *token;
    report.certified = token->status == TokenStatus::Certified;

    const auto& chain = ledger_.blocks();
    for (auto& entry : ledger::trace(chain, to_hex(token_id))) {
        const Digest root = chain[entry.height].header.merkle_root;
        const bool ok = ledger::verify_proof(entry.event.id, entry.proof, root);
        report.history.push_back({entry.height, std::move(entry.event), std::move(entry.proof), root, ok});
    }
    for (const auto& e : ledger_.pending()) {
        if (e.payload.find("token_id") && e.payload.at("token_id").as_bytes() ==
                                              Bytes(token_id.begin(), token_id.end()))
            ++report.pending_events;
    }
    return report;
}

const BadgeToken& BadgeRegistry::require_token(const Digest& token_id) const {
    const auto* token = find_token(token_id);
    if (token == nullptr) fail(ErrorCode::UnknownToken, "unknown token " + to_hex(token_id));
    return *token;
}

TokenStatus BadgeRegistry::authority_transition(const Digest& token_id, const Credential& authority,
                                                TokenAction action) {
    if (!authority.is_authority()) fail(ErrorCode::Unauthorized, "only the central authority may " + std::string(to_string(action)));
    const auto& token = require_token(token_id);
    auto next = next_status(token.status, action);
    if (!next) {
        fail(ErrorCode::IllegalTransition,
             std::string(to_string(action)) + " is not allowed from " + std::string(to_string(token.status)));
    }
    if (action == TokenAction::Restore || action == TokenAction::Certify) {
        if (!definition_approved(token.definition_id))
            fail(ErrorCode::NotApproved, "the badge definition has no approved certification");
    }
    return *next;
}

TokenStatus BadgeRegistry::freeze_token(const Digest& token_id, const Credential& authority) {
    auto next = authority_transition(token_id, authority, TokenAction::Freeze);
    ledger_.append(EventKind::TokenFrozen, Value::Map{{"token_id", Value(token_id)}}, authority.actor_id);
    ledger_.maybe_seal();
    return next;
}

TokenStatus BadgeRegistry::revoke_token(const Digest& token_id, const Credential& authority) {
    auto next = authority_transition(token_id, authority, TokenAction::Revoke);
    ledger_.append(EventKind::TokenRevoked, Value::Map{{"token_id", Value(token_id)}}, authority.actor_id);
    ledger_.maybe_seal();
    return next;
}

TokenStatus BadgeRegistry::restore_token(const Digest& token_id, const Credential& authority) {
    auto next = authority_transition(token_id, authority, TokenAction::Restore);
    const auto& token = require_token(token_id);
    std::string description = token.official_description.value_or(definitions_.at(token.definition_id).metadata.description);
    ledger_.append(EventKind::TokenCertified,
                   Value::Map{
                       {"token_id", Value(token_id)},
                       {"definition_id", Value(token.definition_id)},
                       {"official_description", std::move(description)},
                       {"certified_at", ledger_.now()},
                       {"restore", true},
                   },
                   authority.actor_id);
    ledger_.maybe_seal();
    return next;
}

void BadgeRegistry::certify_token(const Digest& token_id, const Digest& application_id,
                                  const std::string& official_description, const Credential& authority) {
    (void)authority_transition(token_id, authority, TokenAction::Certify);
    const auto& token = require_token(token_id);
    ledger_.append(EventKind::TokenCertified,
                   Value::Map{
                       {"token_id", Value(token_id)},
                       {"definition_id", Value(token.definition_id)},
                       {"application_id", Value(application_id)},
                       {"official_description", official_description},
                       {"certified_at", ledger_.now()},
                       {"restore", false},
                   },
                   authority.actor_id);
}

const BadgeDefinition* BadgeRegistry::find_definition(const Digest& definition_id) const {
    auto it = definitions_.find(definition_id);
    return it == definitions_.end() ? nullptr : &it->second;
}

const BadgeToken* BadgeRegistry::find_token(const Digest& token_id) const {
    auto it = tokens_.find(token_id);
    return it == tokens_.end() ? nullptr : &it->second;
}

std::vector<const BadgeToken*> BadgeRegistry::tokens_of_definition(const Digest& definition_id) const {
    std::vector<const BadgeToken*> out;
    for (const auto& [id, t] : tokens_)
        if (t.definition_id == definition_id) out.push_back(&t);
    std::sort(out.begin(), out.end(), [](const BadgeToken* a, const BadgeToken* b) {
        return std::tie(a->minted_at, a->token_id) < std::tie(b->minted_at, b->token_id);
    });
    return out;
}

std::vector<const BadgeToken*> BadgeRegistry::tokens_held_by(const Address& holder) const {
    std::vector<const BadgeToken*> out;
    for (const auto& [id, t] : tokens_)
        if (t.holder == holder) out.push_back(&t);
    return out;
}

bool BadgeRegistry::definition_approved(const Digest& definition_id) const {
    return approved_definitions_.contains(definition_id);
}

void BadgeRegistry::apply(const LedgerEvent& e) {
    const Value& p = e.payload;
    switch (e.kind) {
        case EventKind::DefinitionRegistered: {
            BadgeDefinition def;
            def.definition_id = p.at("definition_id").as_digest();
            def.metadata = BadgeMetadata::from_value(p);
            def.issuer = p.at("issuer").as_string();
            def.created_at = p.at("created_at").as_int();
            definitions_.emplace(def.definition_id, std::move(def));
            break;
        }
        case EventKind::TokenMinted: {
            BadgeToken t;
            t.token_id = p.at("token_id").as_digest();
            t.definition_id = p.at("definition_id").as_digest();
            t.holder = p.at("holder").as_digest();
            t.grade = p.at("grade").as_string();
            t.issuer = p.at("issuer").as_string();
            t.minted_at = p.at("minted_at").as_int();
            t.award_index = static_cast<std::uint32_t>(p.at("award_index").as_uint());
            AwardKey key{t.definition_id, t.holder, t.grade};
            live_awards_[key] = t.token_id;
            award_counts_[key] = t.award_index + 1;
            tokens_.insert_or_assign(t.token_id, std::move(t));
            break;
        }
        case EventKind::TokenCertified: {
            auto& t = tokens_.at(p.at("token_id").as_digest());
            t.status = TokenStatus::Certified;
            t.official_description = p.at("official_description").as_string();
            t.certified_at = p.at("certified_at").as_int();
            break;
        }
        case EventKind::TokenFrozen:
            tokens_.at(p.at("token_id").as_digest()).status = TokenStatus::Frozen;
            break;
        case EventKind::TokenRevoked: {
            auto& t = tokens_.at(p.at("token_id").as_digest());
            t.status = TokenStatus::Revoked;
            live_awards_.erase(AwardKey{t.definition_id, t.holder, t.grade});
            break;
        }
        case EventKind::ApplicationDecision:
            if (p.at("decision").as_string() == "approve") approved_definitions_.insert(p.at("definition_id").as_digest());
            break;
        default:
            break;
    }
}

Value BadgeRegistry::snapshot() const {
    Value::List defs, toks, approved;
    for (const auto& [id, d] : definitions_) defs.push_back(d.to_value());
    for (const auto& [id, t] : tokens_) toks.push_back(t.to_value());
    for (const auto& id : approved_definitions_) approved.push_back(Value(id));
    return Value::Map{{"approved", std::move(approved)}, {"definitions", std::move(defs)}, {"tokens", std::move(toks)}};
}

}  // namespace medalchain::registry
