#pragma once

// Reference computations and fixture chains shared by the property tests and
// the acceptance suite.

#include <string>
#include <vector>

#include "medalchain/ledger.hpp"

namespace medalchain::testing {

/// Straight recursive definition of the tree: pair up, duplicating the last
/// node of an odd level, until one hash is left.
inline Digest reference_root(std::vector<Digest> level) {
    if (level.empty()) return sha256("");
    if (level.size() == 1) return level[0];
    if (level.size() % 2 == 1) level.push_back(level.back());
    std::vector<Digest> up;
    for (std::size_t i = 0; i < level.size(); i += 2) {
        Bytes cat(level[i].begin(), level[i].end());
        cat.insert(cat.end(), level[i + 1].begin(), level[i + 1].end());
        up.push_back(sha256(cat));
    }
    return reference_root(std::move(up));
}

/// The sibling path for leaf i, derived level by level from the same definition.
inline std::vector<ledger::ProofStep> reference_path(std::vector<Digest> level, std::size_t i) {
    std::vector<ledger::ProofStep> path;
    while (level.size() > 1) {
        if (level.size() % 2 == 1) level.push_back(level.back());
        const bool right = i % 2 == 1;
        path.push_back({right ? ledger::Side::Left : ledger::Side::Right, level[right ? i - 1 : i + 1]});
        std::vector<Digest> up;
        for (std::size_t k = 0; k < level.size(); k += 2) {
            Bytes cat(level[k].begin(), level[k].end());
            cat.insert(cat.end(), level[k + 1].begin(), level[k + 1].end());
            up.push_back(sha256(cat));
        }
        level = std::move(up);
        i /= 2;
    }
    return path;
}

inline std::vector<Digest> leaf_set(std::size_t n, const std::string& tag = "leaf") {
    std::vector<Digest> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(sha256(tag + std::to_string(i)));
    return out;
}

/// Genesis plus three mined blocks holding 3, 3 and 2 badge events.
inline std::vector<ledger::Block> three_block_chain(unsigned difficulty = 4) {
    using ledger::EventKind;
    std::vector<ledger::Block> chain{ledger::make_genesis()};
    const std::vector<std::size_t> sizes{3, 3, 2};
    std::int64_t ts = 1'700'000'000;
    std::uint64_t seq = 0;
    for (const auto n : sizes) {
        std::vector<ledger::LedgerEvent> events;
        for (std::size_t k = 0; k < n; ++k, ++seq) {
            const Digest id = sha256("token" + std::to_string(seq));
            events.push_back(ledger::make_event(
                EventKind::TokenMinted,
                Value::Map{{"definition_id", Value(sha256("def"))}, {"grade", seq % 2 ? "gold" : "silver"},
                           {"holder", Value(sha256("holder" + std::to_string(seq)))}, {"seq", seq},
                           {"token_id", Value(id)}},
                "plat", ts));
            ++ts;
        }
        chain.push_back(ledger::mine_block(chain.back().header, std::move(events), difficulty, ts));
    }
    return chain;
}

/// True when the mutated export is rejected, either by the strict decoder or
/// by chain validation.
inline bool export_rejected(const std::string& text) {
    try {
        return !ledger::validate_chain(ledger::import_text(text)).ok();
    } catch (const Error&) {
        return true;
    }
}

}  // namespace medalchain::testing
