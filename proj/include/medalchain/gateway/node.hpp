#pragma once

#include <cstdint>

#include "medalchain/blind_vote.hpp"
#include "medalchain/certification.hpp"
#include "medalchain/contracts.hpp"
#include "medalchain/identity.hpp"
#include "medalchain/ledger.hpp"
#include "medalchain/registry.hpp"
#include "medalchain/gateway/config.hpp"

namespace medalchain::gateway {

/// Every module wired to one ledger. Time is whatever the caller last set,
/// so a replay reproduces the original run exactly.
class Node {
public:
    explicit Node(const NodeConfig& config);
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    void set_time(std::int64_t t) { now_ = t; }
    [[nodiscard]] std::int64_t time() const noexcept { return now_; }

    /// Seals whatever is pending; returns the number of new blocks.
    std::size_t flush();

    [[nodiscard]] Value snapshot() const;
    [[nodiscard]] Digest state_digest() const { return canonical_hash(snapshot()); }

    const NodeConfig config;
    identity::Directory directory;
    ledger::Ledger ledger;
    registry::BadgeRegistry registry;
    vote::VotingService voting;
    contracts::ContractEngine contracts;
    certification::CertificationFlow certification;

private:
    std::int64_t now_ = 0;
};

}  // namespace medalchain::gateway
