#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "medalchain/canonical.hpp"

namespace medalchain::gateway {

/// The node's append-only command log. File layout: 4-byte magic "MCJL",
/// 4-byte big-endian format version, then records of
/// [u32 length][canonical body][SHA-256 of body].
inline constexpr std::uint32_t kJournalVersion = 1;

struct JournalRecord {
    std::uint64_t offset;
    Value body;
};

/// CorruptLog (with the record offset) or IncompatibleVersion.
std::vector<JournalRecord> read_journal(const std::filesystem::path& file);

class JournalWriter {
public:
    /// Creates the file with a header when it does not exist yet.
    explicit JournalWriter(const std::filesystem::path& file);
    void append(const Value& body);

private:
    std::ofstream out_;
};

}  // namespace medalchain::gateway
