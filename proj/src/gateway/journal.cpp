#include "medalchain/gateway/journal.hpp"

#include <array>
#include <cstring>
#include <iterator>

#include "medalchain/hash.hpp"

namespace medalchain::gateway {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'C', 'J', 'L'};

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void put_be32(std::string& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

[[noreturn]] void corrupt(std::uint64_t offset, const std::string& why) {
    fail(ErrorCode::CorruptLog, "journal record at offset " + std::to_string(offset) + ": " + why);
}

}  // namespace

std::vector<JournalRecord> read_journal(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(ErrorCode::CorruptLog, "cannot open journal " + file.string());
    const std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (data.size() < 8 || std::memcmp(data.data(), kMagic.data(), kMagic.size()) != 0)
        corrupt(0, "bad journal header");
    if (const auto version = be32(data.data() + 4); version != kJournalVersion)
        fail(ErrorCode::IncompatibleVersion,
             "journal format version " + std::to_string(version) + " is not supported");

    std::vector<JournalRecord> out;
    std::size_t pos = 8;
    while (pos < data.size()) {
        const std::uint64_t offset = pos;
        if (data.size() - pos < 4) corrupt(offset, "truncated length prefix");
        const std::size_t len = be32(data.data() + pos);
        pos += 4;
        if (data.size() - pos < len + 32) corrupt(offset, "truncated record");
        const std::span<const std::uint8_t> body(data.data() + pos, len);
        const Digest stored = [&] {
            Digest d;
            std::memcpy(d.data(), data.data() + pos + len, d.size());
            return d;
        }();
        if (sha256(body) != stored) corrupt(offset, "hash mismatch");
        try {
            out.push_back({offset, parse_canonical(std::string_view(reinterpret_cast<const char*>(body.data()), len))});
        } catch (const Error& e) {
            corrupt(offset, e.what());
        }
        pos += len + 32;
    }
    return out;
}

JournalWriter::JournalWriter(const std::filesystem::path& file) {
    const bool fresh = !std::filesystem::exists(file);
    out_.open(file, std::ios::binary | std::ios::app);
    if (!out_) fail(ErrorCode::CorruptLog, "cannot open journal " + file.string() + " for writing");
    if (fresh) {
        std::string header(kMagic.begin(), kMagic.end());
        put_be32(header, kJournalVersion);
        out_.write(header.data(), static_cast<std::streamsize>(header.size()));
        out_.flush();
    }
}

void JournalWriter::append(const Value& body) {
    const std::string text = canonical_encode(body);
    std::string rec;
    put_be32(rec, static_cast<std::uint32_t>(text.size()));
    rec += text;
    const Digest h = sha256(text);
    rec.append(reinterpret_cast<const char*>(h.data()), h.size());
    out_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    out_.flush();
    if (!out_) fail(ErrorCode::CorruptLog, "journal write failed");
}

}  // namespace medalchain::gateway
