#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "medalchain/ledger.hpp"

namespace medalchain::netsim {

using ledger::Block;
using ledger::LedgerEvent;
using Chain = std::vector<Block>;

enum class Byzantine { None, Tamper, Withhold, Equivocate };

std::string_view to_string(Byzantine b) noexcept;

enum class MessageKind { EventSubmit, BlockAnnounce, ChainRequest, ChainResponse };

/// Immutable once enqueued: the payload is shared read-only.
struct NetMessage {
    MessageKind kind;
    std::string sender;
    std::shared_ptr<const std::variant<std::monostate, LedgerEvent, Block, Chain>> payload;
};

struct SimNode {
    std::string node_id;
    Chain chain;
    std::vector<LedgerEvent> pool;
    bool online = true;
    Byzantine byzantine = Byzantine::None;

    [[nodiscard]] bool honest() const noexcept { return byzantine == Byzantine::None; }
    [[nodiscard]] Digest replica_digest() const;
};

/// Index of the chain with the most total work among the valid candidates;
/// ties go to the lexicographically smaller tip hash. NoValidCandidate when
/// every candidate fails validation.
std::size_t fork_choice(std::span<const Chain> candidates);

enum class Op { Submit, Mine, Deliver, DeliverAll, Partition, Heal, Tamper, Offline, Online, Sync, SetByzantine };

struct Instruction {
    Op op;
    std::string node;                            // Submit, Mine, Tamper, Offline, Online, SetByzantine, Deliver (from)
    std::string target;                          // Deliver (to)
    std::string text;                            // Submit
    std::vector<std::vector<std::string>> groups;  // Partition
    Byzantine behaviour = Byzantine::None;       // SetByzantine
};

struct Scenario {
    std::vector<std::string> nodes;
    std::vector<Instruction> script;
};

/// Line format: `nodes a,b,c`, `mine <node>`, `deliver <from> <to>`,
/// `deliver-all`, `partition a,b|c`, `heal`, `tamper <node>`,
/// `submit <node> <text>`, `sync`, `offline <node>`, `online <node>`,
/// `byzantine <node> tamper|withhold|equivocate`. `#` starts a comment.
Scenario parse_scenario(std::string_view text);
std::string format_instruction(const Instruction& instruction);

/// Deterministic in-process network: per-link FIFO queues, scripted
/// delivery, seeded randomness only.
class Network {
public:
    struct Options {
        unsigned difficulty = ledger::kDefaultDifficulty;
        std::uint64_t seed = 0;
    };

    Network(const std::vector<std::string>& node_ids, Options options);

    /// Runs a script; every referenced node is checked before anything runs.
    void run(std::span<const Instruction> script);
    void step(const Instruction& instruction);

    void partition(const std::vector<std::vector<std::string>>& groups);
    void heal();
    /// One full synchronisation round: every online node that is not
    /// withholding offers its chain and pool to every peer, then all queues drain.
    void sync_round();
    void deliver_all();

    [[nodiscard]] const std::vector<SimNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const SimNode& node(std::string_view id) const;
    [[nodiscard]] bool partitioned() const noexcept { return !groups_.empty(); }
    [[nodiscard]] std::size_t queued_messages() const;
    [[nodiscard]] Digest state_digest() const;
    [[nodiscard]] bool honest_replicas_identical() const;
    [[nodiscard]] std::uint64_t steps() const noexcept { return step_; }

private:
    SimNode& mut(std::string_view id);
    std::size_t index_of(std::string_view id) const;
    void check_nodes(const Instruction& instruction) const;
    void send(const SimNode& from, const std::string& to, MessageKind kind,
              std::variant<std::monostate, LedgerEvent, Block, Chain> payload);
    void broadcast(const SimNode& from, MessageKind kind, const std::variant<std::monostate, LedgerEvent, Block, Chain>& payload);
    bool reachable(const std::string& a, const std::string& b) const;
    bool deliver_one(const std::string& from, const std::string& to);
    void receive(SimNode& node, const NetMessage& message);
    void adopt(SimNode& node, Chain chain);
    void submit(SimNode& node, const std::string& text);
    void mine(SimNode& node);
    void tamper(SimNode& node);
    LedgerEvent filler_event(const SimNode& node);

    Options options_;
    std::mt19937_64 rng_;
    std::vector<SimNode> nodes_;
    std::map<std::pair<std::string, std::string>, std::deque<NetMessage>> links_;
    std::vector<std::set<std::string>> groups_;
    std::uint64_t step_ = 0;
};

/// Executes a scenario from scratch and returns the final network.
Network run_scenario(const Scenario& scenario, std::uint64_t seed, unsigned difficulty = ledger::kDefaultDifficulty);

}  // namespace medalchain::netsim
