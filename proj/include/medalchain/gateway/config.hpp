#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "medalchain/blind_vote.hpp"

namespace medalchain::gateway {

inline constexpr std::string_view kConfigFile = "medalchain.conf";
inline constexpr std::string_view kDataDirEnv = "MEDALCHAIN_DATA_DIR";
inline constexpr unsigned kServiceMinKeyBits = 2048;

struct NodeConfig {
    std::filesystem::path data_dir = "medalchain-data";
    std::string listen_host = "127.0.0.1";
    std::uint16_t listen_port = 8740;
    unsigned difficulty = 8;
    std::size_t batch_size = 16;
    std::uint64_t quorum = vote::kDefaultQuorum;
    vote::Threshold threshold{};
    unsigned vote_key_bits = kServiceMinKeyBits;
    std::string authority_key;  // path of the authority's private key, relative to data_dir

    /// difficulty in [0, 24], quorum >= 1, 0 < T <= 1, batch size >= 1.
    /// With for_service set, registrar keys must be at least 2048 bits.
    void validate(bool for_service) const;

    [[nodiscard]] std::string to_text() const;
};

/// Flat key=value text; blank lines and '#' comments are ignored.
/// Unknown keys and malformed values raise InvalidConfig.
NodeConfig parse_config(std::string_view text);

/// Reads `<dir>/medalchain.conf`. The data directory is the directory the
/// file lives in unless the file names another one.
NodeConfig load_config(const std::filesystem::path& dir);

/// The directory given on the command line, else $MEDALCHAIN_DATA_DIR, else the default.
std::filesystem::path resolve_data_dir(const std::string& cli_value);

}  // namespace medalchain::gateway
