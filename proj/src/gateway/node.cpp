#include "medalchain/gateway/node.hpp"

namespace medalchain::gateway {

Node::Node(const NodeConfig& cfg)
    : config(cfg),
      ledger({cfg.difficulty, cfg.batch_size}, [this] { return now_; }),
      registry(ledger, directory),
      voting(ledger, directory),
      contracts(ledger, registry, voting, directory),
      certification(ledger, registry, voting, directory) {}

std::size_t Node::flush() {
    const auto before = ledger.blocks().size();
    ledger.seal();
    return ledger.blocks().size() - before;
}

Value Node::snapshot() const {
    Value::List chain, pending;
    for (const auto& b : ledger.blocks()) chain.push_back(Value(b.hash));
    for (const auto& e : ledger.pending()) pending.push_back(Value(e.id));
    return Value::Map{
        {"applications", certification.snapshot()},
        {"chain", std::move(chain)},
        {"contracts", contracts.snapshot()},
        {"directory", directory.snapshot()},
        {"pending", std::move(pending)},
        {"registry", registry.snapshot()},
        {"voting", voting.snapshot()},
    };
}

}  // namespace medalchain::gateway
