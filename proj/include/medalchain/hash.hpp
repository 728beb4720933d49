#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medalchain {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

/// Incremental SHA-256 for hashing concatenations without building a buffer.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::span<const std::uint8_t> data);
    Sha256& update(std::string_view data);
    Digest finish();

private:
    void* ctx_;
};

inline constexpr Digest kZeroDigest{};

std::string to_hex(std::span<const std::uint8_t> data);

/// Strict lowercase-only decoding; uppercase or odd length yields nullopt.
std::optional<Bytes> from_hex(std::string_view hex);
std::optional<Digest> digest_from_hex(std::string_view hex);

/// Number of leading zero bits, 0..256.
unsigned leading_zero_bits(const Digest& digest) noexcept;

}  // namespace medalchain
