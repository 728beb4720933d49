#include "medalchain/gateway/service.hpp"

#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>

#include "medalchain/gateway/keys.hpp"

namespace medalchain::gateway {

namespace fs = std::filesystem;
using identity::Credential;
using identity::Role;

namespace {

constexpr std::string_view kJournalFile = "journal.log";
constexpr std::string_view kChainFile = "chain.log";

std::vector<std::string> segments(std::string_view path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        auto j = path.find('/', i);
        if (j == std::string_view::npos) j = path.size();
        out.emplace_back(path.substr(i, j - i));
        i = j;
    }
    return out;
}

Digest digest_param(const std::string& s, std::string_view what) {
    auto d = digest_from_hex(s);
    if (!d) fail(ErrorCode::BadRequest, std::string(what) + " must be 64 lowercase hex digits");
    return *d;
}

Response ok(const Value& v, int status = 200) { return {status, canonical_encode(v), {}}; }

Response error_response(ErrorCode code, const std::string& message) {
    return {http_status(code), canonical_encode(Value::Map{{"code", std::string(error_name(code))}, {"message", message}}),
            {}};
}

std::int64_t wall_clock() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Ctx {
    Node& node;
    const std::vector<std::string>& params;
    const Value& body;
    const Request& request;
    const Credential* caller;
    std::uint64_t seed;

    const Credential& who() const {
        if (caller == nullptr) fail(ErrorCode::Unauthorized, "this endpoint needs a signed credential");
        return *caller;
    }
    Digest id(std::size_t i, std::string_view what) const { return digest_param(params.at(i), what); }
};

identity::Address resolve_address(const Node& node, const Value& v) {
    const auto& s = v.as_string();
    if (auto d = digest_from_hex(s)) return *d;
    if (const auto* c = node.directory.find(s)) return c->address();
    fail(ErrorCode::NotFound, "no credential or address '" + s + "'");
}

vote::Serial serial_from(const Value& v) {
    const Bytes b = v.as_bytes();
    vote::Serial s{};
    if (b.size() != s.size()) fail(ErrorCode::BadRequest, "serial must be 16 bytes");
    std::copy(b.begin(), b.end(), s.begin());
    return s;
}

Value block_summary(const ledger::Block& b) {
    return Value::Map{{"event_count", b.events.size()}, {"hash", Value(b.hash)},
                      {"height", b.header.height},       {"merkle_root", Value(b.header.merkle_root)},
                      {"timestamp", b.header.timestamp}};
}

}  // namespace

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Unauthorized:
            return 403;
        case ErrorCode::NotFound:
        case ErrorCode::UnknownIssuer:
        case ErrorCode::UnknownDefinition:
        case ErrorCode::UnknownToken:
        case ErrorCode::UnknownContract:
        case ErrorCode::UnknownRound:
        case ErrorCode::UnknownApplication:
        case ErrorCode::UnknownNode:
            return 404;
        case ErrorCode::IllegalTransition:
        case ErrorCode::DuplicateAward:
        case ErrorCode::AlreadyIssued:
        case ErrorCode::DuplicateSerial:
        case ErrorCode::RoundClosed:
        case ErrorCode::StaleVersion:
        case ErrorCode::AlreadyInitialized:
        case ErrorCode::InactiveContract:
            return 409;
        case ErrorCode::CorruptLog:
        case ErrorCode::IncompatibleVersion:
        case ErrorCode::NonceExhausted:
            return 500;
        default:
            return 400;
    }
}

Request signed_request(std::string method, std::string path, const Value& body, const std::string& actor,
                       const SigningKey& key) {
    Request r;
    r.method = std::move(method);
    r.path = std::move(path);
    r.body = canonical_encode(body);
    r.actor = actor;
    r.signature = to_hex(key.sign(signing_input(r.method, r.path, r.body)));
    return r;
}

// --- routing --------------------------------------------------------------

namespace {

struct Route {
    std::string_view method;
    std::string_view pattern;  // ':' marks a parameter segment
    bool mutating;
    bool authenticated;
    Response (*handler)(Ctx&);

    bool match(const Request& r, std::vector<std::string>& params) const {
        if (r.method != method) return false;
        const auto want = segments(pattern);
        const auto got = segments(r.path);
        if (want.size() != got.size()) return false;
        params.clear();
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (want[i] == ":") params.push_back(got[i]);
            else if (want[i] != got[i]) return false;
        }
        return true;
    }
};

using registry::TokenStatus;

Response status_change(Ctx& c, TokenStatus (registry::BadgeRegistry::*op)(const Digest&, const Credential&)) {
    const auto status = (c.node.registry.*op)(c.id(0, "token id"), c.who());
    return ok(Value::Map{{"status", std::string(registry::to_string(status))}, {"token_id", c.params[0]}});
}

const Route* find_route(const Request& r, std::vector<std::string>& params);

// clang-format off
const std::vector<Route> kRoutes = {
    // chain
    {"GET", "/v1/chain/tip", false, false, [](Ctx& c) {
        const auto& tip = c.node.ledger.tip();
        return ok(Value::Map{{"hash", Value(tip.hash)}, {"height", tip.header.height}});
    }},
    {"GET", "/v1/chain/blocks", false, false, [](Ctx& c) {
        Value::List out;
        for (const auto& b : c.node.ledger.blocks()) out.push_back(block_summary(b));
        return ok(out);
    }},
    {"GET", "/v1/chain/blocks/:", false, false, [](Ctx& c) {
        std::uint64_t h = 0;
        try { h = std::stoull(c.params[0]); } catch (...) { fail(ErrorCode::BadRequest, "height must be a number"); }
        const auto& blocks = c.node.ledger.blocks();
        if (h >= blocks.size()) fail(ErrorCode::NotFound, "no block at height " + c.params[0]);
        return ok(blocks[h].to_value());
    }},
    {"GET", "/v1/chain/validate", false, false, [](Ctx& c) {
        const auto v = ledger::validate_chain(c.node.ledger.blocks());
        Value out = Value::Map{{"ok", v.ok()}};
        if (v.fault) {
            out["fault"] = std::string(ledger::to_string(*v.fault));
            out["height"] = v.height;
        }
        return ok(out);
    }},
    {"GET", "/v1/events/:/proof", false, false, [](Ctx& c) {
        const Digest id = c.id(0, "event id");
        const auto loc = c.node.ledger.locate(id);
        const auto proof = c.node.ledger.prove(id);
        if (!loc || !proof) fail(ErrorCode::NotFound, "event not sealed in any block");
        const auto& block = c.node.ledger.blocks()[loc->height];
        return ok(Value::Map{{"event", block.events[loc->index].to_value()}, {"height", loc->height},
                             {"merkle_root", Value(block.header.merkle_root)}, {"proof", proof->to_value()}});
    }},
    {"GET", "/v1/trace/:", false, false, [](Ctx& c) {
        Value::List out;
        for (const auto& t : ledger::trace(c.node.ledger.blocks(), c.params[0]))
            out.push_back(Value::Map{{"event", t.event.to_value()}, {"height", t.height}, {"proof", t.proof.to_value()}});
        return ok(out);
    }},
    {"GET", "/v1/state/digest", false, false, [](Ctx& c) {
        return ok(Value::Map{{"digest", Value(c.node.state_digest())}});
    }},
    {"GET", "/v1/credentials/:", false, false, [](Ctx& c) {
        const auto* cred = c.node.directory.find(c.params[0]);
        if (cred == nullptr) fail(ErrorCode::NotFound, "no credential '" + c.params[0] + "'");
        Value v = cred->to_value();
        v["address"] = Value(cred->address());
        return ok(v);
    }},

    // badge registry
    {"POST", "/v1/definitions", true, true, [](Ctx& c) {
        const auto meta = registry::BadgeMetadata::from_value(c.body.at("metadata"));
        const Digest id = c.node.registry.register_definition(meta, c.who());
        return ok(c.node.registry.find_definition(id)->to_value(), 201);
    }},
    {"GET", "/v1/definitions/:", false, false, [](Ctx& c) {
        const auto* d = c.node.registry.find_definition(c.id(0, "definition id"));
        if (d == nullptr) fail(ErrorCode::UnknownDefinition, "definition not found");
        Value v = d->to_value();
        v["approved"] = c.node.registry.definition_approved(d->definition_id);
        return ok(v);
    }},
    {"POST", "/v1/tokens", true, true, [](Ctx& c) {
        const auto token = c.node.registry.mint_token(c.body.at("definition_id").as_digest(),
                                                      resolve_address(c.node, c.body.at("holder")),
                                                      c.body.at("grade").as_string(), c.who());
        return ok(token.to_value(), 201);
    }},
    {"GET", "/v1/tokens/:", false, false, [](Ctx& c) {
        const auto* t = c.node.registry.find_token(c.id(0, "token id"));
        if (t == nullptr) fail(ErrorCode::UnknownToken, "token not found");
        return ok(t->to_value());
    }},
    {"GET", "/v1/tokens/:/verify", false, false, [](Ctx& c) {
        const auto report = c.node.registry.verify_token(c.id(0, "token id"));
        if (!report.exists) fail(ErrorCode::UnknownToken, "token not found");
        return ok(report.to_value());
    }},
    {"GET", "/v1/holders/:/tokens", false, false, [](Ctx& c) {
        Value::List out;
        for (const auto* t : c.node.registry.tokens_held_by(resolve_address(c.node, Value(c.params[0]))))
            out.push_back(t->to_value());
        return ok(out);
    }},
    {"POST", "/v1/tokens/:/freeze", true, true, [](Ctx& c) { return status_change(c, &registry::BadgeRegistry::freeze_token); }},
    {"POST", "/v1/tokens/:/revoke", true, true, [](Ctx& c) { return status_change(c, &registry::BadgeRegistry::revoke_token); }},
    {"POST", "/v1/tokens/:/restore", true, true, [](Ctx& c) { return status_change(c, &registry::BadgeRegistry::restore_token); }},

    // contracts
    {"POST", "/v1/activity", true, true, [](Ctx& c) {
        Value v = c.body;
        if (v.find("platform") == nullptr) v["platform"] = c.who().actor_id;
        v["user"] = Value(resolve_address(c.node, v.at("user")));
        if (v.find("attributes") == nullptr) v["attributes"] = Value::Map{};
        const auto event = contracts::ActivityEvent::from_value(v);
        c.node.contracts.ingest(event, c.who());
        return ok(event.to_value(), 201);
    }},
    {"POST", "/v1/contracts", true, true, [](Ctx& c) {
        const Digest id = c.node.contracts.create_contract(c.body.at("definition_id").as_digest(),
                                                           c.body.at("grade").as_string(),
                                                           contracts::conditions_from(c.body.at("conditions")), c.who());
        return ok(c.node.contracts.find_contract(id)->to_value(), 201);
    }},
    {"GET", "/v1/contracts/:", false, false, [](Ctx& c) {
        const auto* k = c.node.contracts.find_contract(c.id(0, "contract id"));
        if (k == nullptr) fail(ErrorCode::UnknownContract, "contract not found");
        return ok(k->to_value());
    }},
    {"POST", "/v1/contracts/:/execute", true, true, [](Ctx& c) {
        const auto token = c.node.contracts.execute_issuance(c.id(0, "contract id"),
                                                             resolve_address(c.node, c.body.at("user")), c.who());
        return ok(token.to_value(), 201);
    }},
    {"POST", "/v1/contracts/:/update", true, true, [](Ctx& c) {
        const auto updated = c.node.contracts.update_rules(
            c.id(0, "contract id"), c.body.at("base_version").as_uint(),
            contracts::conditions_from(c.body.at("conditions")), vote::TallyResult::from_value(c.body.at("tally")),
            c.who());
        return ok(updated.to_value());
    }},
    {"POST", "/v1/contracts/:/active", true, true, [](Ctx& c) {
        c.node.contracts.set_active(c.id(0, "contract id"), c.body.at("active").as_bool(), c.who());
        return ok(c.node.contracts.find_contract(c.id(0, "contract id"))->to_value());
    }},

    // voting
    {"POST", "/v1/rounds", true, true, [](Ctx& c) {
        vote::RoundConfig cfg;
        cfg.subject_hash = c.body.at("subject_hash").as_digest();
        if (const auto* o = c.body.find("options")) {
            cfg.options.clear();
            for (const auto& x : o->as_list()) cfg.options.push_back(x.as_string());
        }
        for (const auto& v : c.body.at("eligible_voters").as_list()) cfg.eligible_voters.insert(resolve_address(c.node, v));
        cfg.quorum = c.node.config.quorum;
        cfg.threshold = c.node.config.threshold;
        if (const auto* q = c.body.find("quorum")) cfg.quorum = q->as_uint();
        if (const auto* t = c.body.find("threshold")) cfg.threshold = vote::Threshold::parse(t->as_string());
        const Digest id = c.node.voting.open_round(cfg, c.who(), c.node.config.vote_key_bits, c.seed);
        return ok(c.node.voting.find_round(id)->to_value(), 201);
    }},
    {"GET", "/v1/rounds/:", false, false, [](Ctx& c) {
        const auto* r = c.node.voting.find_round(c.id(0, "round id"));
        if (r == nullptr) fail(ErrorCode::UnknownRound, "round not found");
        return ok(r->to_value());
    }},
    {"POST", "/v1/rounds/:/request-token", true, true, [](Ctx& c) {
        const auto s = c.node.voting.request_token(c.id(0, "round id"), c.who(), vote::bigint_from(c.body.at("blinded")));
        return ok(Value::Map{{"blind_signature", vote::bigint_value(s)}});
    }},
    {"POST", "/v1/rounds/:/cast", true, false, [](Ctx& c) {
        vote::BallotToken ballot{serial_from(c.body.at("serial")), vote::bigint_from(c.body.at("signature"))};
        const auto event = c.node.voting.cast_vote(c.id(0, "round id"), ballot, c.body.at("option").as_string());
        return ok(Value::Map{{"event_id", Value(event.id)}}, 201);
    }},
    {"POST", "/v1/rounds/:/close", true, true, [](Ctx& c) {
        return ok(c.node.voting.close_and_tally(c.id(0, "round id"), c.who()).to_value());
    }},
    {"GET", "/v1/rounds/:/tally", false, false, [](Ctx& c) {
        const auto* r = c.node.voting.find_round(c.id(0, "round id"));
        if (r == nullptr) fail(ErrorCode::UnknownRound, "round not found");
        if (!r->tally) fail(ErrorCode::NotFound, "round is still open");
        return ok(r->tally->to_value());
    }},

    // certification
    {"POST", "/v1/applications", true, true, [](Ctx& c) {
        auto payload = certification::ApplicationPayload::from_value(c.body.at("payload"));
        const bool draft = c.body.find("draft") != nullptr && c.body.at("draft").as_bool();
        const Digest id = draft ? c.node.certification.save_draft(c.who(), std::move(payload))
                                : c.node.certification.submit_application(c.who(), std::move(payload));
        return ok(c.node.certification.find(id)->to_value(), 201);
    }},
    {"GET", "/v1/applications", false, false, [](Ctx& c) {
        std::optional<certification::AppState> state;
        if (auto it = c.request.query.find("state"); it != c.request.query.end()) {
            state = certification::state_from_string(it->second);
            if (!state) fail(ErrorCode::BadRequest, "unknown application state '" + it->second + "'");
        }
        Value::List out;
        for (const auto* a : c.node.certification.list(state)) out.push_back(a->to_value());
        return ok(out);
    }},
    {"GET", "/v1/applications/:", false, false, [](Ctx& c) {
        const auto* a = c.node.certification.find(c.id(0, "application id"));
        if (a == nullptr) fail(ErrorCode::UnknownApplication, "application not found");
        return ok(a->to_value());
    }},
    {"POST", "/v1/applications/:/submit", true, true, [](Ctx& c) {
        c.node.certification.submit(c.id(0, "application id"), c.who());
        return ok(c.node.certification.find(c.id(0, "application id"))->to_value());
    }},
    {"POST", "/v1/applications/:/review", true, true, [](Ctx& c) {
        c.node.certification.begin_review(c.id(0, "application id"), c.who());
        return ok(c.node.certification.find(c.id(0, "application id"))->to_value());
    }},
    {"POST", "/v1/applications/:/decision", true, true, [](Ctx& c) {
        const auto& d = c.body.at("decision").as_string();
        certification::Decision decision;
        if (d == "approve") decision = certification::Decision::Approve;
        else if (d == "reject") decision = certification::Decision::Reject;
        else fail(ErrorCode::BadRequest, "decision must be approve or reject");
        auto review = certification::ReviewRecord::from_value(c.body.at("review"));
        const std::string reason = c.body.find("reason") ? c.body.at("reason").as_string() : std::string{};
        std::optional<std::string> official;
        if (const auto* o = c.body.find("official_description")) official = o->as_string();
        c.node.certification.decide(c.id(0, "application id"), decision, std::move(review), reason, c.who(),
                                    std::move(official));
        return ok(c.node.certification.find(c.id(0, "application id"))->to_value());
    }},
    {"POST", "/v1/applications/:/certify", true, true, [](Ctx& c) {
        return ok(c.node.certification.certify(c.id(0, "application id"), c.who()).to_value());
    }},
    {"POST", "/v1/applications/:/resubmit", true, true, [](Ctx& c) {
        c.node.certification.resubmit(c.id(0, "application id"),
                                      certification::ApplicationPayload::from_value(c.body.at("payload")), c.who());
        return ok(c.node.certification.find(c.id(0, "application id"))->to_value());
    }},
    {"POST", "/v1/applications/:/withdraw", true, true, [](Ctx& c) {
        c.node.certification.withdraw(c.id(0, "application id"), c.who());
        return ok(c.node.certification.find(c.id(0, "application id"))->to_value());
    }},
};
// clang-format on

const Route* find_route(const Request& r, std::vector<std::string>& params) {
    for (const auto& route : kRoutes)
        if (route.match(r, params)) return &route;
    return nullptr;
}

}  // namespace

// --- service --------------------------------------------------------------

Service::Service(const fs::path& data_dir, Clock clock) : dir_(data_dir), clock_(std::move(clock)) {
    if (!clock_) clock_ = wall_clock;
    NodeConfig cfg = load_config(dir_);
    node_ = std::make_unique<Node>(cfg);
    replay();
    journal_ = std::make_unique<JournalWriter>(dir_ / kJournalFile);
}

void Service::init(const fs::path& data_dir, NodeConfig config, const std::string& authority_actor) {
    if (fs::exists(data_dir / kConfigFile))
        fail(ErrorCode::AlreadyInitialized, "refusing to overwrite the existing node in " + data_dir.string());
    if (authority_actor.empty()) fail(ErrorCode::InvalidConfig, "an authority actor id is required");
    config.data_dir = data_dir;
    config.authority_key = "keys/" + authority_actor + ".pem";
    config.validate(false);
    fs::create_directories(data_dir / "keys");
    for (auto f : {kJournalFile, kChainFile})
        if (fs::exists(data_dir / f))
            fail(ErrorCode::AlreadyInitialized, "refusing to overwrite " + (data_dir / f).string());
    {
        std::ofstream out(data_dir / kConfigFile);
        out << config.to_text();
    }
    {
        std::ofstream chain(data_dir / kChainFile, std::ios::binary);
        ledger::write_chain_record(chain, ledger::make_genesis());
    }
    { JournalWriter create(data_dir / kJournalFile); }
    Service svc(data_dir);
    svc.provision(authority_actor, Role::Authority);
}

fs::path Service::key_path(const std::string& actor_id) const { return dir_ / "keys" / (actor_id + ".pem"); }

Credential Service::provision(const std::string& actor_id, Role role) {
    std::unique_lock lock(mutex_);
    if (actor_id.empty() || actor_id.find_first_of("/\\ \t\n") != std::string::npos || actor_id == "anonymous")
        fail(ErrorCode::BadRequest, "actor ids are non-empty and contain no slashes or spaces");
    if (node_->directory.contains(actor_id)) fail(ErrorCode::SchemaViolation, "actor '" + actor_id + "' already exists");
    if (role == Role::Authority && node_->directory.authority() != nullptr)
        fail(ErrorCode::SchemaViolation, "this deployment already has an authority");
    const auto key = SigningKey::generate();
    Credential cred{actor_id, role, key.public_key(), clock_()};
    const Value record = Value::Map{{"credential", cred.to_value()}, {"type", "credential"}};
    apply_record(record);
    key.save(key_path(actor_id));
    journal_->append(record);
    ++records_;
    return cred;
}

void Service::apply_record(const Value& record) {
    const auto& type = record.at("type").as_string();
    if (type == "credential") {
        auto cred = Credential::from_value(record.at("credential"));
        node_->set_time(cred.issued_at);
        node_->directory.add(std::move(cred));
        return;
    }
    if (type != "request") fail(ErrorCode::CorruptLog, "unknown journal record type '" + type + "'");
    Request r;
    r.method = record.at("method").as_string();
    r.path = record.at("path").as_string();
    r.body = record.at("body").as_string();
    r.actor = record.at("actor").as_string();
    r.signature = record.at("signature").as_string();
    node_->set_time(record.at("time").as_int());
    const Credential* caller = r.actor.empty() ? nullptr : node_->directory.find(r.actor);
    if (!r.actor.empty() && caller == nullptr) fail(ErrorCode::CorruptLog, "request by unknown actor " + r.actor);
    std::int64_t status = 0;
    try {
        status = dispatch(r, caller, record.at("seed").as_uint()).status;
    } catch (const Error& e) {
        status = http_status(e.code());
    }
    if (status != record.at("status").as_int())
        fail(ErrorCode::CorruptLog, "replayed request ended with status " + std::to_string(status) + " instead of " +
                                        std::to_string(record.at("status").as_int()));
    node_->flush();
}

void Service::replay() {
    const auto records = read_journal(dir_ / kJournalFile);
    for (const auto& rec : records) {
        try {
            apply_record(rec.body);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::CorruptLog)
                fail(ErrorCode::CorruptLog, "journal record at offset " + std::to_string(rec.offset) + ": " + e.what());
            fail(ErrorCode::CorruptLog,
                 "journal record at offset " + std::to_string(rec.offset) + " does not replay: " + e.what());
        }
        ++records_;
    }

    // chain.log is derived from the journal; it must agree block for block.
    const fs::path chain_file = dir_ / kChainFile;
    const std::string data = read_file(chain_file);
    const auto& blocks = node_->ledger.blocks();
    std::size_t pos = 0, height = 0;
    while (pos < data.size()) {
        const std::size_t offset = pos;
        if (data.size() - pos < 4) fail(ErrorCode::CorruptLog, "chain.log record at offset " + std::to_string(offset) + ": truncated");
        std::size_t len = 0;
        for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<std::uint8_t>(data[pos + i]);
        pos += 4;
        if (data.size() - pos < len || height >= blocks.size() ||
            std::string_view(data).substr(pos, len) != blocks[height].encode()) {
            fail(ErrorCode::CorruptLog, "chain.log record at offset " + std::to_string(offset) +
                                            " does not match block " + std::to_string(height));
        }
        pos += len;
        ++height;
    }
    if (height == 0) fail(ErrorCode::CorruptLog, "chain.log record at offset 0: missing genesis");
    // A crash after journaling but before the chain append leaves chain.log short.
    persist_blocks(height);
}

void Service::persist_blocks(std::size_t from_height) {
    const auto& blocks = node_->ledger.blocks();
    if (from_height >= blocks.size()) return;
    std::ofstream out(dir_ / kChainFile, std::ios::binary | std::ios::app);
    for (std::size_t h = from_height; h < blocks.size(); ++h) ledger::write_chain_record(out, blocks[h]);
    out.flush();
    if (!out) fail(ErrorCode::CorruptLog, "chain.log write failed");
}

Response Service::handle(const Request& request) {
    Response resp;
    try {
        std::vector<std::string> params;
        const Route* route = find_route(request, params);
        if (route == nullptr) {
            resp = error_response(ErrorCode::NotFound, "no endpoint " + request.method + " " + request.path);
        } else if (route->mutating) {
            resp = mutate(request);
        } else {
            std::shared_lock lock(mutex_);
            resp = dispatch(request, nullptr, 0);
        }
    } catch (const Error& e) {
        resp = error_response(e.code(), e.what());
    } catch (const std::exception& e) {
        resp = error_response(ErrorCode::BadRequest, e.what());
    }
    resp.tip = to_hex(tip_hash());
    return resp;
}

Response Service::mutate(const Request& request) {
    std::unique_lock lock(mutex_);
    std::vector<std::string> params;
    const Route* route = find_route(request, params);

    const Credential* caller = nullptr;
    if (route->authenticated || !request.actor.empty()) {
        if (request.actor.empty() || request.signature.empty()) {
            Response r = error_response(ErrorCode::Unauthorized, "missing credential headers");
            r.status = 401;
            return r;
        }
        caller = node_->directory.find(request.actor);
        const auto sig = from_hex(request.signature);
        if (caller == nullptr || !sig ||
            !verify_ed25519(caller->public_key, signing_input(request.method, request.path, request.body), *sig)) {
            Response r = error_response(ErrorCode::Unauthorized, "credential signature does not verify");
            r.status = 401;
            return r;
        }
    }

    const std::int64_t now = std::max(clock_(), node_->time());
    Value record = Value::Map{
        {"actor", caller ? request.actor : std::string{}},
        {"body", request.body},
        {"method", request.method},
        {"path", request.path},
        {"signature", caller ? request.signature : std::string{}},
        {"time", now},
        {"type", "request"},
    };
    const Digest h = canonical_hash(Value::Map{{"record", record}, {"index", records_}});
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | h[static_cast<std::size_t>(i)];
    record["seed"] = seed;

    // Journal every attempt that reached a module, failed or not, so that a
    // replay re-runs exactly what happened.
    node_->set_time(now);
    const std::size_t before = node_->ledger.blocks().size();
    Response resp;
    try {
        resp = dispatch(request, caller, seed);
    } catch (const Error& e) {
        resp = error_response(e.code(), e.what());
    } catch (const std::exception& e) {
        resp = error_response(ErrorCode::BadRequest, e.what());
    }
    record["status"] = resp.status;
    journal_->append(record);
    ++records_;
    node_->flush();
    persist_blocks(before);
    return resp;
}

Response Service::dispatch(const Request& request, const Credential* caller, std::uint64_t seed) {
    std::vector<std::string> params;
    const Route* route = find_route(request, params);
    if (route == nullptr) fail(ErrorCode::NotFound, "no endpoint " + request.method + " " + request.path);
    Value body = Value::Map{};
    if (!request.body.empty()) {
        body = parse_text(request.body);
        (void)body.as_map();
    }
    Ctx ctx{*node_, params, body, request, caller, seed};
    return route->handler(ctx);
}

Digest Service::state_digest() const {
    std::shared_lock lock(mutex_);
    return node_->state_digest();
}

Digest Service::tip_hash() const {
    std::shared_lock lock(mutex_);
    return node_->ledger.tip_hash();
}

std::vector<ledger::Block> Service::blocks() const {
    std::shared_lock lock(mutex_);
    return node_->ledger.blocks();
}

}  // namespace medalchain::gateway
