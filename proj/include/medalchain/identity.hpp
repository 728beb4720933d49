#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "medalchain/canonical.hpp"
#include "medalchain/hash.hpp"

namespace medalchain::identity {

enum class Role { Authority, Platform, User };

std::string_view to_string(Role role) noexcept;
std::optional<Role> role_from_string(std::string_view name) noexcept;

/// 32-byte public holder identifier: SHA-256 of the verification key.
using Address = Digest;

struct Credential {
    std::string actor_id;
    Role role = Role::User;
    Bytes public_key;
    std::int64_t issued_at = 0;

    [[nodiscard]] Address address() const { return sha256(public_key); }
    [[nodiscard]] bool is_authority() const noexcept { return role == Role::Authority; }
    [[nodiscard]] Value to_value() const;
    static Credential from_value(const Value& v);
};

/// Registered credentials of one deployment; holds at most one authority.
class Directory {
public:
    void add(Credential credential);
    [[nodiscard]] const Credential* find(std::string_view actor_id) const;
    [[nodiscard]] const Credential* authority() const;
    [[nodiscard]] bool contains(std::string_view actor_id) const { return find(actor_id) != nullptr; }
    [[nodiscard]] const std::map<std::string, Credential, std::less<>>& all() const noexcept { return by_actor_; }
    [[nodiscard]] Value snapshot() const;

private:
    std::map<std::string, Credential, std::less<>> by_actor_;
};

}  // namespace medalchain::identity
