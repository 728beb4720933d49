#pragma once

// A throwaway data directory with an initialised node, plus a client that
// signs requests with the keys the node stored under keys/.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>

#include "medalchain/gateway/keys.hpp"
#include "medalchain/gateway/service.hpp"

namespace medalchain::testing {

struct TempDir {
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("medal-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path path;
};

inline gateway::NodeConfig small_node_config() {
    gateway::NodeConfig c;
    c.difficulty = 4;
    c.vote_key_bits = 128;
    c.quorum = 2;
    return c;
}

/// A fixed clock that tests advance by hand.
struct ManualClock {
    std::shared_ptr<std::int64_t> now = std::make_shared<std::int64_t>(1'700'000'000);
    gateway::Service::Clock fn() const {
        auto p = now;
        return [p] { return (*p)++; };
    }
};

class Client {
public:
    explicit Client(gateway::Service& svc) : svc_(svc) {}

    gateway::Response call(const std::string& method, const std::string& path, const Value& body = Value::Map{},
                           const std::string& actor = {}) {
        gateway::Request r;
        if (actor.empty()) {
            r.method = method;
            r.path = path;
            if (method == "POST") r.body = canonical_encode(body);
        } else {
            r = gateway::signed_request(method, path, body, actor, key(actor));
        }
        return svc_.handle(r);
    }

    Value json(const gateway::Response& r) const { return parse_text(r.body); }

    const gateway::SigningKey& key(const std::string& actor) {
        auto it = keys_.find(actor);
        if (it == keys_.end())
            it = keys_.emplace(actor, std::make_unique<gateway::SigningKey>(
                                          gateway::SigningKey::load(svc_.key_path(actor)))).first;
        return *it->second;
    }

private:
    gateway::Service& svc_;
    std::map<std::string, std::unique_ptr<gateway::SigningKey>> keys_;
};

inline Value scholar_metadata(const std::string& name = "Scholar") {
    return Value::Map{{"criteria", "pass two exams"},
                      {"description", "Awarded for exams"},
                      {"grade_levels", Value::List{"silver", "gold"}},
                      {"icon", Value(sha256("icon:" + name))},
                      {"name", name}};
}

inline Value passing_review_value() {
    return Value::Map{{"compliance_ok", true}, {"design_ok", true},
                      {"notes", Value::Map{{"compliance", "lawful"}, {"design", "clear"}, {"platform", "authentic"}, {"security", "secure"}}},
                      {"platform_ok", true}, {"security_ok", true}};
}

}  // namespace medalchain::testing
