#include "medalchain/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "medalchain/gateway/keys.hpp"
#include "medalchain/gateway/server.hpp"
#include "medalchain/gateway/service.hpp"
#include "medalchain/netsim.hpp"

namespace medalchain::cli {

namespace fs = std::filesystem;
using gateway::Request;
using gateway::Response;

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

enum class Output { Table, Machine };

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::NotFound, "cannot read " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string cell(const Value& v) {
    if (v.is_string()) return v.as_string();
    std::string text = canonical_encode(v);
    // byte strings encode as quoted hex
    if (text.size() >= 2 && text.front() == '"') text = text.substr(1, text.size() - 2);
    return text;
}

// Maps print as key/value rows; lists of maps as a table with one column per key.
void print_table(std::ostream& out, const Value& v) {
    if (v.is_map()) {
        std::size_t width = 0;
        for (const auto& [k, x] : v.as_map()) width = std::max(width, k.size());
        for (const auto& [k, x] : v.as_map()) out << std::left << std::setw(static_cast<int>(width) + 2) << k << cell(x) << "\n";
        return;
    }
    if (v.is_list()) {
        std::vector<std::string> cols;
        std::set<std::string> seen;
        for (const auto& row : v.as_list())
            if (row.is_map())
                for (const auto& [k, x] : row.as_map())
                    if (seen.insert(k).second) cols.push_back(k);
        if (cols.empty()) {
            for (const auto& row : v.as_list()) out << cell(row) << "\n";
            return;
        }
        std::vector<std::size_t> width(cols.size());
        std::vector<std::vector<std::string>> rows;
        for (std::size_t c = 0; c < cols.size(); ++c) width[c] = cols[c].size();
        for (const auto& row : v.as_list()) {
            std::vector<std::string> r;
            for (std::size_t c = 0; c < cols.size(); ++c) {
                const auto* x = row.find(cols[c]);
                r.push_back(x ? cell(*x) : "");
                width[c] = std::max(width[c], r.back().size());
            }
            rows.push_back(std::move(r));
        }
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t c = 0; c < r.size(); ++c)
                out << std::left << std::setw(static_cast<int>(width[c]) + (c + 1 < r.size() ? 2 : 0)) << r[c];
            out << "\n";
        };
        line(cols);
        for (const auto& r : rows) line(r);
        return;
    }
    out << cell(v) << "\n";
}

void emit(std::ostream& out, Output mode, const Value& v) {
    if (mode == Output::Machine) out << canonical_encode(v) << "\n";
    else print_table(out, v);
}

/// Talks to a running node over HTTP when a server URL is given, otherwise
/// opens the data directory in-process. Both paths send the same request.
class Transport {
public:
    Transport(fs::path dir, std::string server) : dir_(std::move(dir)), server_(std::move(server)) {}

    Response send(const Request& r) {
        if (server_.empty()) return local().handle(r);
        httplib::Client client(server_);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!r.actor.empty()) {
            headers.emplace(std::string(gateway::kActorHeader), r.actor);
            headers.emplace(std::string(gateway::kSignatureHeader), r.signature);
        }
        std::string target = r.path;
        if (!r.query.empty()) {
            char sep = '?';
            for (const auto& [k, v] : r.query) {
                target += sep + k + "=" + v;
                sep = '&';
            }
        }
        auto res = r.method == "GET" ? client.Get(target, headers)
                                     : client.Post(target, headers, r.body, "application/json");
        if (!res) fail(ErrorCode::NotFound, "cannot reach " + server_ + ": " + httplib::to_string(res.error()));
        return {res->status, res->body, res->get_header_value(std::string(gateway::kTipHeader).c_str())};
    }

    Response get(const std::string& path, std::map<std::string, std::string> query = {}) {
        Request r;
        r.method = "GET";
        r.path = path;
        r.query = std::move(query);
        return send(r);
    }

    Response post(const std::string& path, const Value& body, const std::string& actor, const std::string& key_file) {
        if (actor.empty()) {
            Request r;
            r.method = "POST";
            r.path = path;
            r.body = canonical_encode(body);
            return send(r);
        }
        const fs::path key = key_file.empty() ? dir_ / "keys" / (actor + ".pem") : fs::path(key_file);
        return send(gateway::signed_request("POST", path, body, actor, gateway::SigningKey::load(key)));
    }

    gateway::Service& local() {
        if (!service_) service_ = std::make_unique<gateway::Service>(dir_);
        return *service_;
    }

private:
    fs::path dir_;
    std::string server_;
    std::unique_ptr<gateway::Service> service_;
};

/// Prints the body on success; on failure prints the error and returns 1.
int report(std::ostream& out, std::ostream& err, Output mode, const Response& r) {
    Value body;
    try {
        body = parse_text(r.body);
    } catch (const Error&) {
        err << "error: unreadable response (" << r.status << ")\n";
        return kDomainError;
    }
    if (r.status >= 200 && r.status < 300) {
        emit(out, mode, body);
        return kOk;
    }
    const auto* code = body.find("code");
    const auto* msg = body.find("message");
    err << "error: " << (code ? code->as_string() : std::to_string(r.status)) << ": " << (msg ? msg->as_string() : "")
        << "\n";
    return kDomainError;
}

vote::BigInt random_below(const vote::BigInt& n, std::random_device& rd) {
    gmp_randclass rng(gmp_randinit_default);
    rng.seed((static_cast<unsigned long>(rd()) << 32) ^ rd());
    return rng.get_z_range(n);
}

std::sig_atomic_t volatile g_stop = 0;
gateway::HttpServer* g_server = nullptr;

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"medalchain node"};
    app.require_subcommand(1);
    std::string data_dir_opt, server, output = "table";
    app.add_option("--data-dir", data_dir_opt, "node data directory (default: $MEDALCHAIN_DATA_DIR)");
    app.add_option("--server", server, "talk to a running node, e.g. http://127.0.0.1:8740");

    auto add_output = [&output](CLI::App* cmd) {
        cmd->add_option("--output", output, "table or machine-readable")
            ->check(CLI::IsMember({"table", "machine-readable"}));
    };

    // init
    auto* init = app.add_subcommand("init", "create a node data directory");
    std::string authority;
    gateway::NodeConfig cfg;
    std::string threshold_text = cfg.threshold.str(), listen;
    init->add_option("--authority", authority, "actor id of the central authority")->required();
    init->add_option("--difficulty", cfg.difficulty, "leading zero bits per block")->check(CLI::Range(0u, 24u));
    init->add_option("--batch-size", cfg.batch_size)->check(CLI::PositiveNumber);
    init->add_option("--quorum", cfg.quorum)->check(CLI::PositiveNumber);
    init->add_option("--threshold", threshold_text, "approval ratio, e.g. 3/5 or 0.6");
    init->add_option("--vote-key-bits", cfg.vote_key_bits)->check(CLI::Range(16u, 16384u));
    init->add_option("--listen", listen, "host:port");

    // serve
    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    std::string serve_listen;
    serve->add_option("--listen", serve_listen, "host:port (overrides the config)");

    // keygen
    auto* keygen = app.add_subcommand("keygen", "provision a credential and its signing key");
    std::string actor, role_text = "user";
    keygen->add_option("--actor", actor)->required();
    keygen->add_option("--role", role_text)->check(CLI::IsMember({"platform", "user", "Platform", "User"}));
    add_output(keygen);

    // define
    auto* define = app.add_subcommand("define", "register a badge definition");
    std::string key_file, metadata_file;
    define->add_option("--actor", actor)->required();
    define->add_option("--key", key_file, "signing key (default: keys/<actor>.pem)");
    define->add_option("--metadata", metadata_file, "file holding the metadata map")->required()->check(CLI::ExistingFile);
    add_output(define);

    // mint
    auto* mint = app.add_subcommand("mint", "issue a badge token");
    std::string definition, holder, grade;
    mint->add_option("--actor", actor)->required();
    mint->add_option("--key", key_file);
    mint->add_option("--definition", definition)->required();
    mint->add_option("--holder", holder, "holder address or actor id")->required();
    mint->add_option("--grade", grade)->required();
    add_output(mint);

    // verify
    auto* verify = app.add_subcommand("verify", "verify a token against the chain");
    std::string token_id;
    verify->add_option("token_id", token_id)->required();
    add_output(verify);

    // vote-round
    auto* vote_cmd = app.add_subcommand("vote-round", "blind-signature voting");
    vote_cmd->require_subcommand(1);
    std::string round_id, subject, voters, option, serial_hex, signature_hex;
    std::uint64_t quorum = 0;
    std::string round_threshold;
    auto* v_open = vote_cmd->add_subcommand("open", "open a round");
    v_open->add_option("--actor", actor)->required();
    v_open->add_option("--key", key_file);
    v_open->add_option("--subject", subject, "32-byte subject hash")->required();
    v_open->add_option("--voters", voters, "comma-separated actor ids or addresses")->required();
    v_open->add_option("--quorum", quorum)->check(CLI::PositiveNumber);
    v_open->add_option("--threshold", round_threshold);
    add_output(v_open);
    auto* v_ballot = vote_cmd->add_subcommand("ballot", "blind, obtain and unblind a ballot");
    v_ballot->add_option("--actor", actor)->required();
    v_ballot->add_option("--key", key_file);
    v_ballot->add_option("--round", round_id)->required();
    add_output(v_ballot);
    auto* v_cast = vote_cmd->add_subcommand("cast", "cast an unblinded ballot anonymously");
    v_cast->add_option("--round", round_id)->required();
    v_cast->add_option("--serial", serial_hex)->required();
    v_cast->add_option("--signature", signature_hex)->required();
    v_cast->add_option("--option", option)->required();
    add_output(v_cast);
    auto* v_close = vote_cmd->add_subcommand("close", "close a round and publish the tally");
    v_close->add_option("--actor", actor)->required();
    v_close->add_option("--key", key_file);
    v_close->add_option("--round", round_id)->required();
    add_output(v_close);
    auto* v_tally = vote_cmd->add_subcommand("tally", "show a closed round's tally");
    v_tally->add_option("--round", round_id)->required();
    add_output(v_tally);

    // sim
    auto* sim = app.add_subcommand("sim", "network simulator");
    sim->require_subcommand(1);
    auto* sim_run = sim->add_subcommand("run", "execute a scenario file");
    std::string scenario_file;
    std::uint64_t seed = 0;
    unsigned sim_difficulty = ledger::kDefaultDifficulty;
    sim_run->add_option("--scenario", scenario_file)->required()->check(CLI::ExistingFile);
    sim_run->add_option("--seed", seed)->required();
    sim_run->add_option("--difficulty", sim_difficulty)->check(CLI::Range(0u, 24u));
    add_output(sim_run);

    // export-chain / validate-export
    auto* export_cmd = app.add_subcommand("export-chain", "print one canonical block per line");
    std::string out_file;
    export_cmd->add_option("--out", out_file, "write to a file instead of stdout");
    auto* validate_cmd = app.add_subcommand("validate-export", "re-validate an exported chain offline");
    std::string export_file;
    validate_cmd->add_option("file", export_file)->required()->check(CLI::ExistingFile);
    add_output(validate_cmd);

    // api
    auto* api = app.add_subcommand("api", "send one raw API request");
    std::string method, path, body_text;
    api->add_option("method", method)->required()->check(CLI::IsMember({"GET", "POST"}));
    api->add_option("path", path)->required();
    api->add_option("--actor", actor);
    api->add_option("--key", key_file);
    api->add_option("--body", body_text, "request body in the canonical text form");
    add_output(api);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsageError;
    }

    const Output mode = output == "machine-readable" ? Output::Machine : Output::Table;
    const fs::path dir = gateway::resolve_data_dir(data_dir_opt);
    Transport net(dir, server);

    try {
        if (*init) {
            try {
                cfg.threshold = vote::Threshold::parse(threshold_text);
            } catch (const Error&) {
                err << "usage error: --threshold: expected a ratio such as 3/5 or 0.6\n";
                return kUsageError;
            }
            if (!listen.empty()) {
                auto parsed = gateway::parse_config("listen=" + listen);
                cfg.listen_host = parsed.listen_host;
                cfg.listen_port = parsed.listen_port;
            }
            gateway::Service::init(dir, cfg, authority);
            out << "initialised " << dir.string() << " with authority " << authority << "\n";
            return kOk;
        }
        if (*serve) {
            auto config = gateway::load_config(dir);
            if (!serve_listen.empty()) {
                auto parsed = gateway::parse_config("listen=" + serve_listen);
                config.listen_host = parsed.listen_host;
                config.listen_port = parsed.listen_port;
            }
            config.validate(true);
            gateway::Service& svc = net.local();
            gateway::HttpServer http(svc);
            g_server = &http;
            std::signal(SIGINT, [](int) {
                g_stop = 1;
                if (g_server) g_server->stop();
            });
            std::signal(SIGTERM, [](int) {
                g_stop = 1;
                if (g_server) g_server->stop();
            });
            out << "serving " << dir.string() << " on " << config.listen_host << ":" << config.listen_port
                << " tip " << to_hex(svc.tip_hash()) << std::endl;
            const bool ok = http.listen(config.listen_host, config.listen_port);
            g_server = nullptr;
            if (!ok && !g_stop) {
                err << "error: cannot listen on " << config.listen_host << ":" << config.listen_port << "\n";
                return kDomainError;
            }
            return kOk;
        }
        if (*keygen) {
            const auto role = *identity::role_from_string(role_text == "platform" ? "Platform"
                                                          : role_text == "user"   ? "User"
                                                                                  : role_text);
            auto& svc = net.local();
            const auto cred = svc.provision(actor, role);
            emit(out, mode,
                 Value::Map{{"actor_id", cred.actor_id},
                            {"address", Value(cred.address())},
                            {"key_file", svc.key_path(actor).string()},
                            {"role", std::string(identity::to_string(cred.role))}});
            return kOk;
        }
        if (*define) {
            const Value meta = parse_text(read_file(metadata_file));
            return report(out, err, mode, net.post("/v1/definitions", Value::Map{{"metadata", meta}}, actor, key_file));
        }
        if (*mint) {
            return report(out, err, mode,
                          net.post("/v1/tokens",
                                   Value::Map{{"definition_id", definition}, {"grade", grade}, {"holder", holder}},
                                   actor, key_file));
        }
        if (*verify) return report(out, err, mode, net.get("/v1/tokens/" + token_id + "/verify"));
        if (*v_open) {
            Value::List list;
            std::stringstream ss(voters);
            for (std::string v; std::getline(ss, v, ',');)
                if (!v.empty()) list.push_back(v);
            Value body = Value::Map{{"eligible_voters", std::move(list)}, {"subject_hash", subject}};
            if (quorum > 0) body["quorum"] = quorum;
            if (!round_threshold.empty()) body["threshold"] = round_threshold;
            return report(out, err, mode, net.post("/v1/rounds", body, actor, key_file));
        }
        if (*v_ballot) {
            const Response info = net.get("/v1/rounds/" + round_id);
            if (info.status != 200) return report(out, err, mode, info);
            const Digest rid = parse_text(info.body).at("round_id").as_digest();
            const auto pk = vote::RsaPublicKey::from_value(parse_text(info.body).at("registrar_key"));
            // Blinding stays on this side: the node only ever sees the blinded value.
            std::random_device rd;
            vote::Serial serial{};
            vote::BigInt m, r;
            do {
                for (auto& b : serial) b = static_cast<std::uint8_t>(rd());
                m = vote::ballot_message(rid, serial, pk);
            } while (m <= 0);
            do r = random_below(pk.n, rd);
            while (r <= 1 || gcd(r, pk.n) != 1);
            const auto blinded = vote::blind(m, r, pk);
            const Response signed_resp = net.post("/v1/rounds/" + round_id + "/request-token",
                                                  Value::Map{{"blinded", vote::bigint_value(blinded)}}, actor, key_file);
            if (signed_resp.status != 200) return report(out, err, mode, signed_resp);
            const auto s = vote::unblind(vote::bigint_from(parse_text(signed_resp.body).at("blind_signature")), r, pk);
            if (!vote::verify_signature(m, s, pk)) {
                err << "error: InvalidSignature: registrar returned a bad signature\n";
                return kDomainError;
            }
            emit(out, mode,
                 Value::Map{{"round_id", Value(rid)}, {"serial", Value::bytes(serial)}, {"signature", vote::bigint_value(s)}});
            return kOk;
        }
        if (*v_cast) {
            return report(out, err, mode,
                          net.post("/v1/rounds/" + round_id + "/cast",
                                   Value::Map{{"option", option}, {"serial", serial_hex}, {"signature", signature_hex}}, "",
                                   ""));
        }
        if (*v_close) return report(out, err, mode, net.post("/v1/rounds/" + round_id + "/close", Value::Map{}, actor, key_file));
        if (*v_tally) return report(out, err, mode, net.get("/v1/rounds/" + round_id + "/tally"));
        if (*sim_run) {
            const auto scenario = netsim::parse_scenario(read_file(scenario_file));
            const auto result = netsim::run_scenario(scenario, seed, sim_difficulty);
            Value::List rows;
            for (const auto& n : result.nodes()) {
                rows.push_back(Value::Map{{"behaviour", std::string(netsim::to_string(n.byzantine))},
                                          {"chain_digest", Value(n.replica_digest())},
                                          {"height", n.chain.back().header.height},
                                          {"node", n.node_id},
                                          {"online", n.online},
                                          {"tip", Value(n.chain.back().hash)}});
            }
            if (mode == Output::Machine) {
                emit(out, mode,
                     Value::Map{{"honest_replicas_identical", result.honest_replicas_identical()},
                                {"nodes", std::move(rows)},
                                {"state_digest", Value(result.state_digest())}});
            } else {
                print_table(out, Value(std::move(rows)));
                out << "honest replicas identical: " << (result.honest_replicas_identical() ? "yes" : "no") << "\n";
            }
            return kOk;
        }
        if (*export_cmd) {
            std::ofstream file;
            if (!out_file.empty()) {
                file.open(out_file, std::ios::binary);
                if (!file) fail(ErrorCode::NotFound, "cannot write " + out_file);
            }
            std::ostream& sink = out_file.empty() ? out : file;
            sink << ledger::export_text(net.local().blocks());
            return kOk;
        }
        if (*validate_cmd) {
            std::vector<ledger::Block> chain;
            try {
                chain = ledger::import_text(read_file(export_file));
            } catch (const Error& e) {
                emit(out, mode, Value::Map{{"ok", false}, {"reason", std::string(e.what())}});
                return kDomainError;
            }
            const auto verdict = ledger::validate_chain(chain);
            Value v = Value::Map{{"blocks", chain.size()}, {"ok", verdict.ok()}};
            if (!verdict.ok()) {
                v["fault"] = std::string(ledger::to_string(*verdict.fault));
                v["height"] = verdict.height;
            } else {
                v["tip"] = Value(chain.back().hash);
            }
            emit(out, mode, v);
            return verdict.ok() ? kOk : kDomainError;
        }
        if (*api) {
            if (method == "GET") return report(out, err, mode, net.get(path));
            const Value body = body_text.empty() ? Value(Value::Map{}) : parse_text(body_text);
            return report(out, err, mode, net.post(path, body, actor, key_file));
        }
    } catch (const Error& e) {
        err << "error: " << e.name() << ": " << e.what() << "\n";
        return kDomainError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDomainError;
    }
    return kUsageError;
}

}  // namespace medalchain::cli
