#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string_view>

#include "medalchain/hash.hpp"

namespace medalchain::gateway {

/// Ed25519 signing key held in an OpenSSL EVP_PKEY.
class SigningKey {
public:
    static SigningKey generate();
    static SigningKey load(const std::filesystem::path& pem_file);
    void save(const std::filesystem::path& pem_file) const;

    [[nodiscard]] Bytes public_key() const;  // 32 raw bytes
    [[nodiscard]] Bytes sign(std::string_view message) const;

    struct Free {
        void operator()(void* p) const;
    };

private:
    explicit SigningKey(void* pkey) : pkey_(pkey) {}
    std::unique_ptr<void, Free> pkey_;
};

bool verify_ed25519(std::span<const std::uint8_t> public_key, std::string_view message,
                    std::span<const std::uint8_t> signature);

/// What a request signature covers.
std::string signing_input(std::string_view method, std::string_view path, std::string_view body);

}  // namespace medalchain::gateway
