#include "medalchain/canonical.hpp"

#include <charconv>

#include "json.hpp"

namespace medalchain {

namespace {

std::string kind_name(const Value::Storage& s) {
    static constexpr const char* kNames[] = {"bool", "integer", "integer", "string", "bytes", "list", "map"};
    return kNames[s.index()];
}

[[noreturn]] void type_error(const Value::Storage& s, const char* wanted) {
    fail(ErrorCode::ParseError, std::string("expected ") + wanted + ", found " + kind_name(s));
}

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xe0) == 0xc0) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        // reject overlong forms, surrogates and out-of-range code points
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
        if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
        i += len;
    }
    return true;
}

void encode_string(std::string& out, std::string_view s) {
    if (!valid_utf8(s)) fail(ErrorCode::UnsupportedValue, "string is not valid UTF-8");
    static constexpr char kDigits[] = "0123456789abcdef";
    out.push_back('"');
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    out += "\\u00";
                    out.push_back(kDigits[c >> 4]);
                    out.push_back(kDigits[c & 0x0f]);
                } else {
                    out.push_back(ch);
                }
        }
    }
    out.push_back('"');
}

template <typename I>
void encode_integer(std::string& out, I v) {
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
}

void encode_into(std::string& out, const Value& value) {
    std::visit(
        [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>) {
                out += v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t> || std::is_same_v<T, std::uint64_t>) {
                encode_integer(out, v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                encode_string(out, v);
            } else if constexpr (std::is_same_v<T, ByteString>) {
                out.push_back('"');
                out += to_hex(v.data);
                out.push_back('"');
            } else if constexpr (std::is_same_v<T, Value::List>) {
                out.push_back('[');
                bool first = true;
                for (const auto& item : v) {
                    if (!first) out.push_back(',');
                    first = false;
                    encode_into(out, item);
                }
                out.push_back(']');
            } else {
                out.push_back('{');
                bool first = true;
                for (const auto& [key, item] : v) {
                    if (!first) out.push_back(',');
                    first = false;
                    encode_string(out, key);
                    out.push_back(':');
                    encode_into(out, item);
                }
                out.push_back('}');
            }
        },
        value.storage());
}

Value from_json(const nlohmann::json& j) {
    using nlohmann::json;
    switch (j.type()) {
        case json::value_t::boolean: return Value(j.get<bool>());
        case json::value_t::number_integer: return Value(j.get<std::int64_t>());
        case json::value_t::number_unsigned: return Value(j.get<std::uint64_t>());
        case json::value_t::string: return Value(j.get<std::string>());
        case json::value_t::array: {
            Value::List list;
            list.reserve(j.size());
            for (const auto& item : j) list.push_back(from_json(item));
            return Value(std::move(list));
        }
        case json::value_t::object: {
            Value::Map map;
            for (auto it = j.begin(); it != j.end(); ++it) map.emplace(it.key(), from_json(it.value()));
            return Value(std::move(map));
        }
        case json::value_t::number_float:
            fail(ErrorCode::UnsupportedValue, "floating-point values are not allowed in canonical records");
        default:
            fail(ErrorCode::UnsupportedValue, "null and binary values are not allowed in canonical records");
    }
}

}  // namespace

bool Value::as_bool() const {
    if (auto* b = std::get_if<bool>(&storage_)) return *b;
    type_error(storage_, "bool");
}

std::int64_t Value::as_int() const {
    if (auto* i = std::get_if<std::int64_t>(&storage_)) return *i;
    if (std::holds_alternative<std::uint64_t>(storage_)) fail(ErrorCode::ParseError, "integer out of signed range");
    type_error(storage_, "integer");
}

std::uint64_t Value::as_uint() const {
    if (auto* u = std::get_if<std::uint64_t>(&storage_)) return *u;
    if (auto* i = std::get_if<std::int64_t>(&storage_)) {
        if (*i < 0) fail(ErrorCode::ParseError, "expected non-negative integer");
        return static_cast<std::uint64_t>(*i);
    }
    type_error(storage_, "integer");
}

const std::string& Value::as_string() const {
    if (auto* s = std::get_if<std::string>(&storage_)) return *s;
    type_error(storage_, "string");
}

Bytes Value::as_bytes() const {
    if (auto* b = std::get_if<ByteString>(&storage_)) return b->data;
    if (auto* s = std::get_if<std::string>(&storage_)) {
        auto decoded = from_hex(*s);
        if (!decoded) fail(ErrorCode::ParseError, "expected lowercase hex byte string");
        return *decoded;
    }
    type_error(storage_, "bytes");
}

Digest Value::as_digest() const {
    Bytes b = as_bytes();
    if (b.size() != 32) fail(ErrorCode::ParseError, "expected 32-byte digest");
    Digest d{};
    std::copy(b.begin(), b.end(), d.begin());
    return d;
}

const Value::List& Value::as_list() const {
    if (auto* l = std::get_if<List>(&storage_)) return *l;
    type_error(storage_, "list");
}

const Value::Map& Value::as_map() const {
    if (auto* m = std::get_if<Map>(&storage_)) return *m;
    type_error(storage_, "map");
}

Value::Map& Value::as_map() {
    if (auto* m = std::get_if<Map>(&storage_)) return *m;
    type_error(storage_, "map");
}

const Value& Value::at(std::string_view key) const {
    const Value* v = find(key);
    if (v == nullptr) fail(ErrorCode::ParseError, "missing field '" + std::string(key) + "'");
    return *v;
}

const Value* Value::find(std::string_view key) const {
    const auto& m = as_map();
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
}

Value& Value::operator[](const std::string& key) { return as_map()[key]; }

bool operator==(const Value& a, const Value& b) { return canonical_encode(a) == canonical_encode(b); }

std::string canonical_encode(const Value& value) {
    std::string out;
    encode_into(out, value);
    return out;
}

Value parse_text(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("malformed record: ") + e.what());
    }
    return from_json(j);
}

Value parse_canonical(std::string_view text) {
    Value v = parse_text(text);
    if (canonical_encode(v) != text) fail(ErrorCode::ParseError, "record is not in canonical form");
    return v;
}

}  // namespace medalchain
