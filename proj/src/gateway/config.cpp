#include "medalchain/gateway/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace medalchain::gateway {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T number(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        fail(ErrorCode::InvalidConfig, key + ": expected an unsigned integer, got '" + value + "'");
    return out;
}

}  // namespace

void NodeConfig::validate(bool for_service) const {
    if (difficulty > ledger::kMaxDifficulty)
        fail(ErrorCode::InvalidConfig, "difficulty must lie in [0, 24], got " + std::to_string(difficulty));
    if (batch_size < 1) fail(ErrorCode::InvalidConfig, "batch_size must be at least 1");
    if (quorum < 1) fail(ErrorCode::InvalidConfig, "quorum must be at least 1");
    if (!threshold.valid()) fail(ErrorCode::InvalidConfig, "threshold must lie in (0, 1]");
    if (vote_key_bits < 16) fail(ErrorCode::InvalidConfig, "vote_key_bits must be at least 16");
    if (for_service && vote_key_bits < kServiceMinKeyBits)
        fail(ErrorCode::InvalidConfig, "vote_key_bits must be at least 2048 when serving");
}

std::string NodeConfig::to_text() const {
    std::ostringstream out;
    out << "data_dir=" << data_dir.string() << "\n"
        << "listen=" << listen_host << ":" << listen_port << "\n"
        << "difficulty=" << difficulty << "\n"
        << "batch_size=" << batch_size << "\n"
        << "quorum=" << quorum << "\n"
        << "threshold=" << threshold.str() << "\n"
        << "vote_key_bits=" << vote_key_bits << "\n"
        << "authority_key=" << authority_key << "\n";
    return out.str();
}

NodeConfig parse_config(std::string_view text) {
    NodeConfig c;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "data_dir") {
            c.data_dir = value;
        } else if (key == "listen") {
            auto colon = value.rfind(':');
            if (colon == std::string::npos) fail(ErrorCode::InvalidConfig, "listen: expected host:port");
            c.listen_host = value.substr(0, colon);
            c.listen_port = number<std::uint16_t>(key, value.substr(colon + 1));
        } else if (key == "difficulty") {
            c.difficulty = number<unsigned>(key, value);
        } else if (key == "batch_size") {
            c.batch_size = number<std::size_t>(key, value);
        } else if (key == "quorum") {
            c.quorum = number<std::uint64_t>(key, value);
        } else if (key == "threshold") {
            try {
                c.threshold = vote::Threshold::parse(value);
            } catch (const Error& e) {
                fail(ErrorCode::InvalidConfig, "threshold: " + std::string(e.what()));
            }
        } else if (key == "vote_key_bits") {
            c.vote_key_bits = number<unsigned>(key, value);
        } else if (key == "authority_key") {
            c.authority_key = value;
        } else {
            fail(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
        }
    }
    c.validate(false);
    return c;
}

NodeConfig load_config(const std::filesystem::path& dir) {
    std::ifstream in(dir / kConfigFile);
    if (!in) fail(ErrorCode::InvalidConfig, "no " + std::string(kConfigFile) + " in " + dir.string());
    std::stringstream buf;
    buf << in.rdbuf();
    NodeConfig c = parse_config(buf.str());
    c.data_dir = dir;
    return c;
}

std::filesystem::path resolve_data_dir(const std::string& cli_value) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv(std::string(kDataDirEnv).c_str()); env != nullptr && *env != '\0') return env;
    return NodeConfig{}.data_dir;
}

}  // namespace medalchain::gateway
