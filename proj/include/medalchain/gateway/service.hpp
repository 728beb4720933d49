#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "medalchain/gateway/config.hpp"
#include "medalchain/gateway/journal.hpp"
#include "medalchain/gateway/node.hpp"

namespace medalchain::gateway {

inline constexpr std::string_view kActorHeader = "X-Medal-Actor";
inline constexpr std::string_view kSignatureHeader = "X-Medal-Signature";
inline constexpr std::string_view kTipHeader = "X-Chain-Tip";

struct Request {
    std::string method;
    std::string path;  // without the query string
    std::map<std::string, std::string> query;
    std::string body;
    std::string actor;      // X-Medal-Actor
    std::string signature;  // X-Medal-Signature, hex
};

struct Response {
    int status = 200;
    std::string body;
    std::string tip;  // X-Chain-Tip
};

/// HTTP status for a module error code.
int http_status(ErrorCode code) noexcept;

/// Builds a signed request; used by the CLI and tests.
class SigningKey;
Request signed_request(std::string method, std::string path, const Value& body, const std::string& actor,
                       const SigningKey& key);

/// The node behind the HTTP API. Opening a data directory replays its
/// journal; every accepted mutation is journaled, then sealed into a block
/// and appended to chain.log. Mutations are serialized; reads share a lock.
class Service {
public:
    using Clock = std::function<std::int64_t()>;

    /// CorruptLog / IncompatibleVersion when the stored logs do not replay.
    explicit Service(const std::filesystem::path& data_dir, Clock clock = {});

    /// Creates a fresh data directory with its config, an empty journal, a
    /// genesis-only chain.log and the authority credential. AlreadyInitialized
    /// when a config exists already.
    static void init(const std::filesystem::path& data_dir, NodeConfig config, const std::string& authority_actor);

    /// Generates a key pair under keys/ and journals the credential.
    /// Returns the stored credential.
    identity::Credential provision(const std::string& actor_id, identity::Role role);

    Response handle(const Request& request);

    [[nodiscard]] Digest state_digest() const;
    [[nodiscard]] Digest tip_hash() const;
    [[nodiscard]] std::vector<ledger::Block> blocks() const;
    [[nodiscard]] const NodeConfig& config() const noexcept { return node_->config; }
    [[nodiscard]] const std::filesystem::path& data_dir() const noexcept { return dir_; }
    [[nodiscard]] std::filesystem::path key_path(const std::string& actor_id) const;

    /// Read access for in-process callers such as tests.
    template <typename Fn>
    auto inspect(Fn&& fn) const {
        std::shared_lock lock(mutex_);
        return fn(static_cast<const Node&>(*node_));
    }

private:
    Response dispatch(const Request& request, const identity::Credential* caller, std::uint64_t seed);
    Response mutate(const Request& request);
    void replay();
    void apply_record(const Value& record);
    void persist_blocks(std::size_t from_height);

    std::filesystem::path dir_;
    Clock clock_;
    std::unique_ptr<Node> node_;
    std::unique_ptr<JournalWriter> journal_;
    std::uint64_t records_ = 0;
    mutable std::shared_mutex mutex_;
};

}  // namespace medalchain::gateway
