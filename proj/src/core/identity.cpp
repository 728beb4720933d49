#include "medalchain/identity.hpp"

namespace medalchain::identity {

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::Authority: return "Authority";
        case Role::Platform: return "Platform";
        case Role::User: return "User";
    }
    return "User";
}

std::optional<Role> role_from_string(std::string_view name) noexcept {
    if (name == "Authority" || name == "authority") return Role::Authority;
    if (name == "Platform" || name == "platform") return Role::Platform;
    if (name == "User" || name == "user") return Role::User;
    return std::nullopt;
}

Value Credential::to_value() const {
    return Value::Map{
        {"actor_id", actor_id},
        {"issued_at", issued_at},
        {"public_key", Value::bytes(public_key)},
        {"role", std::string(to_string(role))},
    };
}

Credential Credential::from_value(const Value& v) {
    Credential c;
    c.actor_id = v.at("actor_id").as_string();
    auto role = role_from_string(v.at("role").as_string());
    if (!role) fail(ErrorCode::ParseError, "unknown role");
    c.role = *role;
    c.public_key = v.at("public_key").as_bytes();
    c.issued_at = v.at("issued_at").as_int();
    return c;
}

void Directory::add(Credential credential) {
    if (credential.actor_id.empty()) fail(ErrorCode::SchemaViolation, "actor id must not be empty");
    if (contains(credential.actor_id)) fail(ErrorCode::SchemaViolation, "actor '" + credential.actor_id + "' already registered");
    if (credential.is_authority() && authority() != nullptr) {
        fail(ErrorCode::SchemaViolation, "a deployment has exactly one authority credential");
    }
    auto key = credential.actor_id;
    by_actor_.emplace(std::move(key), std::move(credential));
}

const Credential* Directory::find(std::string_view actor_id) const {
    auto it = by_actor_.find(actor_id);
    return it == by_actor_.end() ? nullptr : &it->second;
}

const Credential* Directory::authority() const {
    for (const auto& [id, c] : by_actor_)
        if (c.is_authority()) return &c;
    return nullptr;
}

Value Directory::snapshot() const {
    Value::List list;
    for (const auto& [id, c] : by_actor_) list.push_back(c.to_value());
    return list;
}

}  // namespace medalchain::identity
