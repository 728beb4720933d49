#include "medalchain/netsim.hpp"

#include <algorithm>
#include <sstream>

namespace medalchain::netsim {

using ledger::EventKind;
using Payload = std::variant<std::monostate, LedgerEvent, Block, Chain>;

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto at = s.find(sep, start);
        out.emplace_back(s.substr(start, at - start));
        if (at == std::string_view::npos) break;
        start = at + 1;
    }
    return out;
}

Instruction on(Op op, std::string node, std::string target = {}) {
    Instruction i{};
    i.op = op;
    i.node = std::move(node);
    i.target = std::move(target);
    return i;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

Digest payload_digest(const Payload& p) {
    return std::visit(
        [](const auto& x) -> Digest {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, LedgerEvent>) {
                return x.id;
            } else if constexpr (std::is_same_v<T, Block>) {
                return sha256(x.encode());
            } else if constexpr (std::is_same_v<T, Chain>) {
                Sha256 h;
                for (const auto& b : x) h.update(b.encode());
                return h.finish();
            } else {
                return Digest{};
            }
        },
        p);
}

bool chain_has(const Chain& chain, const Digest& event_id) {
    for (const auto& b : chain)
        for (const auto& e : b.events)
            if (e.id == event_id) return true;
    return false;
}

}  // namespace

std::string_view to_string(Byzantine b) noexcept {
    switch (b) {
        case Byzantine::None: return "honest";
        case Byzantine::Tamper: return "tamper";
        case Byzantine::Withhold: return "withhold";
        case Byzantine::Equivocate: return "equivocate";
    }
    return "honest";
}

Digest SimNode::replica_digest() const {
    Sha256 h;
    for (const auto& b : chain) h.update(b.encode());
    return h.finish();
}

std::size_t fork_choice(std::span<const Chain> candidates) {
    std::optional<std::size_t> best;
    std::uint64_t best_work = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!ledger::validate_chain(c).ok()) continue;
        const auto work = ledger::total_work(c);
        if (!best || work > best_work ||
            (work == best_work && c.back().hash < candidates[*best].back().hash)) {
            best = i;
            best_work = work;
        }
    }
    if (!best) fail(ErrorCode::NoValidCandidate, "no candidate chain validates");
    return *best;
}

// --- scenarios ------------------------------------------------------------

Scenario parse_scenario(std::string_view text) {
    Scenario sc;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string word;
        in >> word;
        std::vector<std::string> args;
        for (std::string a; in >> a;) args.push_back(a);
        auto bad = [&](const std::string& why) {
            fail(ErrorCode::BadScript, "line " + std::to_string(line_no) + ": " + why);
        };
        auto need = [&](std::size_t n) {
            if (args.size() != n) bad("'" + word + "' takes " + std::to_string(n) + " argument(s)");
        };

        Instruction ins{};
        if (word == "nodes") {
            need(1);
            sc.nodes = split(args[0], ',');
            continue;
        } else if (word == "mine") {
            need(1);
            ins = on(Op::Mine, args[0]);
        } else if (word == "deliver") {
            need(2);
            ins = on(Op::Deliver, args[0], args[1]);
        } else if (word == "deliver-all") {
            need(0);
            ins.op = Op::DeliverAll;
        } else if (word == "partition") {
            need(1);
            ins.op = Op::Partition;
            for (const auto& g : split(args[0], '|')) ins.groups.push_back(split(g, ','));
        } else if (word == "heal") {
            need(0);
            ins.op = Op::Heal;
        } else if (word == "tamper") {
            need(1);
            ins = on(Op::Tamper, args[0]);
        } else if (word == "submit") {
            if (args.size() < 2) bad("'submit' takes a node and a note");
            ins = on(Op::Submit, args[0]);
            auto pos = line.find(args[0], word.size()) + args[0].size();
            ins.text = trim(line.substr(pos));
        } else if (word == "sync") {
            need(0);
            ins.op = Op::Sync;
        } else if (word == "offline" || word == "online") {
            need(1);
            ins = on(word == "offline" ? Op::Offline : Op::Online, args[0]);
        } else if (word == "byzantine") {
            need(2);
            ins = on(Op::SetByzantine, args[0]);
            if (args[1] == "tamper") ins.behaviour = Byzantine::Tamper;
            else if (args[1] == "withhold") ins.behaviour = Byzantine::Withhold;
            else if (args[1] == "equivocate") ins.behaviour = Byzantine::Equivocate;
            else bad("unknown byzantine behaviour '" + args[1] + "'");
        } else {
            bad("unknown instruction '" + word + "'");
        }
        sc.script.push_back(std::move(ins));
    }
    return sc;
}

std::string format_instruction(const Instruction& i) {
    switch (i.op) {
        case Op::Submit: return "submit " + i.node + " " + i.text;
        case Op::Mine: return "mine " + i.node;
        case Op::Deliver: return "deliver " + i.node + " " + i.target;
        case Op::DeliverAll: return "deliver-all";
        case Op::Partition: {
            std::string s = "partition ";
            for (std::size_t g = 0; g < i.groups.size(); ++g) {
                if (g) s += "|";
                for (std::size_t k = 0; k < i.groups[g].size(); ++k) s += (k ? "," : "") + i.groups[g][k];
            }
            return s;
        }
        case Op::Heal: return "heal";
        case Op::Tamper: return "tamper " + i.node;
        case Op::Offline: return "offline " + i.node;
        case Op::Online: return "online " + i.node;
        case Op::Sync: return "sync";
        case Op::SetByzantine: return "byzantine " + i.node + " " + std::string(to_string(i.behaviour));
    }
    return {};
}

// --- network --------------------------------------------------------------

Network::Network(const std::vector<std::string>& node_ids, Options options)
    : options_(options), rng_(options.seed) {
    std::set<std::string> seen;
    for (const auto& id : node_ids) {
        if (id.empty() || !seen.insert(id).second) fail(ErrorCode::BadScript, "node ids must be unique and non-empty");
        SimNode n;
        n.node_id = id;
        n.chain.push_back(ledger::make_genesis());
        nodes_.push_back(std::move(n));
    }
}

std::size_t Network::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].node_id == id) return i;
    fail(ErrorCode::UnknownNode, "unknown node '" + std::string(id) + "'");
}

const SimNode& Network::node(std::string_view id) const { return nodes_[index_of(id)]; }
SimNode& Network::mut(std::string_view id) { return nodes_[index_of(id)]; }

void Network::check_nodes(const Instruction& ins) const {
    switch (ins.op) {
        case Op::Deliver:
            (void)index_of(ins.target);
            [[fallthrough]];
        case Op::Submit:
        case Op::Mine:
        case Op::Tamper:
        case Op::Offline:
        case Op::Online:
        case Op::SetByzantine:
            (void)index_of(ins.node);
            break;
        case Op::Partition:
            for (const auto& g : ins.groups)
                for (const auto& n : g) (void)index_of(n);
            break;
        default:
            break;
    }
}

void Network::run(std::span<const Instruction> script) {
    for (const auto& ins : script) check_nodes(ins);
    for (const auto& ins : script) step(ins);
}

void Network::step(const Instruction& ins) {
    check_nodes(ins);
    ++step_;
    switch (ins.op) {
        case Op::Submit: submit(mut(ins.node), ins.text); break;
        case Op::Mine: mine(mut(ins.node)); break;
        case Op::Deliver: deliver_one(ins.node, ins.target); break;
        case Op::DeliverAll: deliver_all(); break;
        case Op::Partition: partition(ins.groups); break;
        case Op::Heal: heal(); break;
        case Op::Tamper: tamper(mut(ins.node)); break;
        case Op::Offline: mut(ins.node).online = false; break;
        case Op::Online: mut(ins.node).online = true; break;
        case Op::Sync: sync_round(); break;
        case Op::SetByzantine: mut(ins.node).byzantine = ins.behaviour; break;
    }
}

void Network::partition(const std::vector<std::vector<std::string>>& groups) {
    std::vector<std::set<std::string>> next;
    std::set<std::string> seen;
    for (const auto& g : groups) {
        if (g.empty()) fail(ErrorCode::BadPartition, "empty partition group");
        std::set<std::string> group;
        for (const auto& n : g) {
            (void)index_of(n);
            if (!seen.insert(n).second) fail(ErrorCode::BadPartition, "node '" + n + "' appears in two groups");
            group.insert(n);
        }
        next.push_back(std::move(group));
    }
    if (seen.size() != nodes_.size()) fail(ErrorCode::BadPartition, "partition groups must cover every node");
    groups_ = std::move(next);
}

void Network::heal() { groups_.clear(); }

bool Network::reachable(const std::string& a, const std::string& b) const {
    if (groups_.empty()) return true;
    for (const auto& g : groups_)
        if (g.contains(a)) return g.contains(b);
    return false;
}

void Network::send(const SimNode& from, const std::string& to, MessageKind kind, Payload payload) {
    if (!from.online) return;
    links_[{from.node_id, to}].push_back(
        NetMessage{kind, from.node_id, std::make_shared<const Payload>(std::move(payload))});
}

void Network::broadcast(const SimNode& from, MessageKind kind, const Payload& payload) {
    for (const auto& peer : nodes_)
        if (peer.node_id != from.node_id) send(from, peer.node_id, kind, payload);
}

std::size_t Network::queued_messages() const {
    std::size_t n = 0;
    for (const auto& [link, q] : links_) n += q.size();
    return n;
}

bool Network::deliver_one(const std::string& from, const std::string& to) {
    auto it = links_.find({from, to});
    if (it == links_.end() || it->second.empty()) return false;
    NetMessage msg = std::move(it->second.front());
    it->second.pop_front();
    SimNode& receiver = mut(to);
    // messages across a partition or to an offline node are lost
    if (!reachable(from, to) || !receiver.online) return true;
    receive(receiver, msg);
    return true;
}

void Network::deliver_all() {
    // Round-robin over links in a fixed order keeps delivery deterministic.
    for (std::size_t guard = 0; guard < 1'000'000; ++guard) {
        bool any = false;
        std::vector<std::pair<std::string, std::string>> keys;
        for (const auto& [link, q] : links_)
            if (!q.empty()) keys.push_back(link);
        for (const auto& [from, to] : keys) any = deliver_one(from, to) || any;
        if (!any) return;
    }
}

void Network::sync_round() {
    for (const auto& n : nodes_) {
        if (!n.online || n.byzantine == Byzantine::Withhold) continue;
        broadcast(n, MessageKind::ChainResponse, n.chain);
        for (const auto& e : n.pool) broadcast(n, MessageKind::EventSubmit, e);
    }
    deliver_all();
}

void Network::receive(SimNode& node, const NetMessage& msg) {
    switch (msg.kind) {
        case MessageKind::EventSubmit: {
            const auto& e = std::get<LedgerEvent>(*msg.payload);
            bool known = std::any_of(node.pool.begin(), node.pool.end(), [&](const LedgerEvent& p) { return p.id == e.id; });
            if (!known && !chain_has(node.chain, e.id)) node.pool.push_back(e);
            break;
        }
        case MessageKind::BlockAnnounce: {
            const auto& b = std::get<Block>(*msg.payload);
            if (b.header.prev_hash == node.chain.back().hash) {
                Chain candidate = node.chain;
                candidate.push_back(b);
                if (ledger::validate_chain(candidate).ok()) adopt(node, std::move(candidate));
            } else if (b.header.height > node.chain.back().header.height) {
                send(node, msg.sender, MessageKind::ChainRequest, std::monostate{});
            }
            break;
        }
        case MessageKind::ChainRequest:
            if (node.byzantine != Byzantine::Withhold) send(node, msg.sender, MessageKind::ChainResponse, node.chain);
            break;
        case MessageKind::ChainResponse: {
            const auto& offered = std::get<Chain>(*msg.payload);
            std::vector<Chain> candidates{node.chain, offered};
            try {
                if (fork_choice(candidates) == 1 && node.chain.back().hash != offered.back().hash) adopt(node, offered);
            } catch (const Error&) {
                // neither chain validates; keep what we have
            }
            break;
        }
    }
}

void Network::adopt(SimNode& node, Chain chain) {
    std::set<Digest> in_new;
    for (const auto& b : chain)
        for (const auto& e : b.events) in_new.insert(e.id);
    std::vector<LedgerEvent> pool;
    std::set<Digest> pooled;
    auto keep = [&](const LedgerEvent& e) {
        if (!in_new.contains(e.id) && pooled.insert(e.id).second) pool.push_back(e);
    };
    for (const auto& b : node.chain)
        for (const auto& e : b.events) keep(e);
    for (const auto& e : node.pool) keep(e);
    node.pool = std::move(pool);
    node.chain = std::move(chain);
}

LedgerEvent Network::filler_event(const SimNode& node) {
    return ledger::make_event(EventKind::RecordLinked,
                              Value::Map{{"note", "heartbeat"},
                                         {"origin", node.node_id},
                                         {"salt", static_cast<std::uint64_t>(rng_())},
                                         {"step", step_}},
                              node.node_id, static_cast<std::int64_t>(step_));
}

void Network::submit(SimNode& node, const std::string& text) {
    auto e = ledger::make_event(EventKind::RecordLinked,
                                Value::Map{{"note", text}, {"origin", node.node_id}, {"step", step_}}, node.node_id,
                                static_cast<std::int64_t>(step_));
    node.pool.push_back(e);
    if (node.byzantine != Byzantine::Withhold) broadcast(node, MessageKind::EventSubmit, e);
}

void Network::mine(SimNode& node) {
    if (!node.online) return;
    std::vector<LedgerEvent> events = node.pool;
    if (events.empty()) events.push_back(filler_event(node));
    const auto& parent = node.chain.back().header;
    const auto ts = std::max<std::int64_t>(static_cast<std::int64_t>(step_), parent.timestamp);
    Block block = ledger::mine_block(parent, events, options_.difficulty, ts);

    if (node.byzantine == Byzantine::Equivocate) {
        events.push_back(filler_event(node));
        Block twin = ledger::mine_block(parent, std::move(events), options_.difficulty, ts);
        std::size_t k = 0;
        for (const auto& peer : nodes_) {
            if (peer.node_id == node.node_id) continue;
            send(node, peer.node_id, MessageKind::BlockAnnounce, (k++ % 2 == 0) ? block : twin);
        }
    } else if (node.byzantine != Byzantine::Withhold) {
        broadcast(node, MessageKind::BlockAnnounce, block);
    }
    node.chain.push_back(std::move(block));
    node.pool.clear();
}

void Network::tamper(SimNode& node) {
    if (node.byzantine == Byzantine::None) node.byzantine = Byzantine::Tamper;
    if (node.chain.size() < 2) {
        std::vector<LedgerEvent> events{filler_event(node)};
        node.chain.push_back(ledger::mine_block(node.chain.back().header, std::move(events), options_.difficulty,
                                                std::max<std::int64_t>(static_cast<std::int64_t>(step_),
                                                                       node.chain.back().header.timestamp)));
    }
    // Rewrite a payload but keep the sealed header: the block no longer
    // matches its merkle root.
    Block forged = node.chain.back();
    forged.events.front().payload["note"] = "rewritten by " + node.node_id;
    node.chain.back() = forged;
    broadcast(node, MessageKind::BlockAnnounce, forged);
    broadcast(node, MessageKind::ChainResponse, node.chain);
}

Digest Network::state_digest() const {
    Value::List nodes;
    for (const auto& n : nodes_) {
        Value::List blocks, pool;
        for (const auto& b : n.chain) blocks.push_back(Value(sha256(b.encode())));
        for (const auto& e : n.pool) pool.push_back(Value(e.id));
        nodes.push_back(Value::Map{{"byzantine", std::string(to_string(n.byzantine))},
                                   {"chain", std::move(blocks)},
                                   {"id", n.node_id},
                                   {"online", n.online},
                                   {"pool", std::move(pool)}});
    }
    Value::List links;
    for (const auto& [link, q] : links_) {
        if (q.empty()) continue;
        Value::List msgs;
        for (const auto& m : q)
            msgs.push_back(Value::Map{{"digest", Value(payload_digest(*m.payload))}, {"kind", static_cast<int>(m.kind)}});
        links.push_back(Value::Map{{"from", link.first}, {"messages", std::move(msgs)}, {"to", link.second}});
    }
    Value::List groups;
    for (const auto& g : groups_) groups.push_back(Value::List(g.begin(), g.end()));
    return canonical_hash(Value::Map{
        {"groups", std::move(groups)}, {"links", std::move(links)}, {"nodes", std::move(nodes)}, {"step", step_}});
}

bool Network::honest_replicas_identical() const {
    std::optional<Digest> first;
    for (const auto& n : nodes_) {
        if (!n.honest()) continue;
        const auto d = n.replica_digest();
        if (!first) first = d;
        else if (*first != d) return false;
    }
    return true;
}

Network run_scenario(const Scenario& scenario, std::uint64_t seed, unsigned difficulty) {
    Network net(scenario.nodes, {difficulty, seed});
    net.run(scenario.script);
    return net;
}

}  // namespace medalchain::netsim
