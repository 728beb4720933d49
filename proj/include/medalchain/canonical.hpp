#pragma once

#include <concepts>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "medalchain/error.hpp"
#include "medalchain/hash.hpp"

namespace medalchain {

/// Raw bytes inside a canonical record. Encoded as a lowercase hex string,
/// so after a text round trip they come back as a plain string; typed
/// accessors (`as_bytes`, `as_digest`) accept either form.
struct ByteString {
    Bytes data;
    bool operator==(const ByteString&) const = default;
};

/// The closed value model for everything that gets hashed: strings,
/// integers, byte strings, booleans, lists and string-keyed maps.
/// Floating point is rejected at construction and at parse time.
class Value {
public:
    using List = std::vector<Value>;
    // std::string ordering is unsigned-bytewise, i.e. UTF-8 byte order.
    using Map = std::map<std::string, Value, std::less<>>;
    using Storage = std::variant<bool, std::int64_t, std::uint64_t, std::string, ByteString, List, Map>;

    Value() : storage_(Map{}) {}
    Value(bool b) : storage_(b) {}
    template <std::integral I>
        requires(!std::same_as<I, bool> && !std::same_as<I, char>)
    Value(I i) {
        if constexpr (std::is_signed_v<I>) {
            storage_ = static_cast<std::int64_t>(i);
        } else if (static_cast<std::uint64_t>(i) <= static_cast<std::uint64_t>(INT64_MAX)) {
            storage_ = static_cast<std::int64_t>(i);
        } else {
            storage_ = static_cast<std::uint64_t>(i);
        }
    }
    template <std::floating_point F>
    Value(F) {
        fail(ErrorCode::UnsupportedValue, "floating-point values are not allowed in canonical records");
    }
    Value(const char* s) : storage_(std::string(s)) {}
    Value(std::string s) : storage_(std::move(s)) {}
    Value(std::string_view s) : storage_(std::string(s)) {}
    Value(ByteString b) : storage_(std::move(b)) {}
    Value(const Digest& d) : storage_(ByteString{Bytes(d.begin(), d.end())}) {}
    Value(List l) : storage_(std::move(l)) {}
    Value(Map m) : storage_(std::move(m)) {}

    static Value bytes(std::span<const std::uint8_t> data) {
        return Value(ByteString{Bytes(data.begin(), data.end())});
    }

    [[nodiscard]] const Storage& storage() const noexcept { return storage_; }

    [[nodiscard]] bool is_bool() const noexcept { return std::holds_alternative<bool>(storage_); }
    [[nodiscard]] bool is_integer() const noexcept {
        return std::holds_alternative<std::int64_t>(storage_) || std::holds_alternative<std::uint64_t>(storage_);
    }
    [[nodiscard]] bool is_string() const noexcept { return std::holds_alternative<std::string>(storage_); }
    [[nodiscard]] bool is_list() const noexcept { return std::holds_alternative<List>(storage_); }
    [[nodiscard]] bool is_map() const noexcept { return std::holds_alternative<Map>(storage_); }

    [[nodiscard]] bool as_bool() const;
    [[nodiscard]] std::int64_t as_int() const;
    [[nodiscard]] std::uint64_t as_uint() const;
    [[nodiscard]] const std::string& as_string() const;
    [[nodiscard]] Bytes as_bytes() const;
    [[nodiscard]] Digest as_digest() const;
    [[nodiscard]] const List& as_list() const;
    [[nodiscard]] const Map& as_map() const;
    [[nodiscard]] Map& as_map();

    /// Map member lookup; ParseError when absent or when this is not a map.
    [[nodiscard]] const Value& at(std::string_view key) const;
    [[nodiscard]] const Value* find(std::string_view key) const;
    Value& operator[](const std::string& key);

    friend bool operator==(const Value& a, const Value& b);

private:
    Storage storage_;
};

/// Deterministic byte encoding used for every hash in the system.
std::string canonical_encode(const Value& value);

/// Parses the human-readable text form (JSON syntax, any key order and
/// whitespace). Floats and nulls raise UnsupportedValue.
Value parse_text(std::string_view text);

/// Like parse_text but additionally requires `text` to already be in
/// canonical form byte for byte.
Value parse_canonical(std::string_view text);

inline Digest canonical_hash(const Value& value) { return sha256(canonical_encode(value)); }

}  // namespace medalchain
