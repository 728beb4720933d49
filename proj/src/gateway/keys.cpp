#include "medalchain/gateway/keys.hpp"

#include <openssl/evp.h>
#include <openssl/pem.h>

#include <cstdio>

#include "medalchain/error.hpp"

namespace medalchain::gateway {

namespace {

EVP_PKEY* raw(const std::unique_ptr<void, SigningKey::Free>& p) { return static_cast<EVP_PKEY*>(p.get()); }

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

void SigningKey::Free::operator()(void* p) const { EVP_PKEY_free(static_cast<EVP_PKEY*>(p)); }

SigningKey SigningKey::generate() {
    EVP_PKEY* pkey = EVP_PKEY_Q_keygen(nullptr, nullptr, "ED25519");
    if (pkey == nullptr) fail(ErrorCode::InvalidConfig, "ed25519 key generation failed");
    return SigningKey(pkey);
}

SigningKey SigningKey::load(const std::filesystem::path& pem_file) {
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(pem_file.c_str(), "rb"));
    if (!f) fail(ErrorCode::InvalidConfig, "cannot read key file " + pem_file.string());
    EVP_PKEY* pkey = PEM_read_PrivateKey(f.get(), nullptr, nullptr, nullptr);
    if (pkey == nullptr || EVP_PKEY_get_id(pkey) != EVP_PKEY_ED25519) {
        EVP_PKEY_free(pkey);
        fail(ErrorCode::InvalidConfig, "not an ed25519 private key: " + pem_file.string());
    }
    return SigningKey(pkey);
}

void SigningKey::save(const std::filesystem::path& pem_file) const {
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(pem_file.c_str(), "wb"));
    if (!f) fail(ErrorCode::InvalidConfig, "cannot write key file " + pem_file.string());
    if (PEM_write_PrivateKey(f.get(), raw(pkey_), nullptr, nullptr, 0, nullptr, nullptr) != 1)
        fail(ErrorCode::InvalidConfig, "cannot write key file " + pem_file.string());
    std::filesystem::permissions(pem_file, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
}

Bytes SigningKey::public_key() const {
    Bytes out(32);
    std::size_t len = out.size();
    if (EVP_PKEY_get_raw_public_key(raw(pkey_), out.data(), &len) != 1 || len != 32)
        fail(ErrorCode::InvalidConfig, "cannot export public key");
    return out;
}

Bytes SigningKey::sign(std::string_view message) const {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    Bytes sig(64);
    std::size_t len = sig.size();
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, raw(pkey_)) != 1 ||
        EVP_DigestSign(ctx.get(), sig.data(), &len, reinterpret_cast<const unsigned char*>(message.data()),
                       message.size()) != 1)
        fail(ErrorCode::InvalidSignature, "signing failed");
    sig.resize(len);
    return sig;
}

bool verify_ed25519(std::span<const std::uint8_t> public_key, std::string_view message,
                    std::span<const std::uint8_t> signature) {
    if (public_key.size() != 32 || signature.size() != 64) return false;
    std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)> pkey(
        EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size()), EVP_PKEY_free);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!pkey || !ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) return false;
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                            reinterpret_cast<const unsigned char*>(message.data()), message.size()) == 1;
}

std::string signing_input(std::string_view method, std::string_view path, std::string_view body) {
    std::string out;
    out.reserve(method.size() + path.size() + body.size() + 2);
    out.append(method).append(" ").append(path).append("\n").append(body);
    return out;
}

}  // namespace medalchain::gateway
