#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medalchain {

// Error codes are surfaced verbatim over HTTP and in CLI output, so the
// enumerator names double as the wire vocabulary.
enum class ErrorCode {
    // encoding / ledger
    UnsupportedValue,
    ParseError,
    IndexOutOfRange,
    NonceExhausted,
    DifficultyOutOfRange,
    EmptyBlock,
    // registry
    SchemaViolation,
    UnknownIssuer,
    UnknownDefinition,
    UnknownToken,
    DuplicateAward,
    BadGrade,
    IssuerMismatch,
    Unauthorized,
    IllegalTransition,
    NotApproved,
    // contracts
    UnknownContract,
    InactiveContract,
    NotEligible,
    ActivityOutOfOrder,
    VoteNotPassing,
    VoteSubjectMismatch,
    StaleVersion,
    // voting
    KeyTooSmall,
    BadBlindingFactor,
    MessageOutOfRange,
    UnknownRound,
    AlreadyIssued,
    InvalidSignature,
    DuplicateSerial,
    UnknownOption,
    RoundClosed,
    // certification
    UnknownApplication,
    ForeignDefinition,
    DanglingSample,
    IncompleteReview,
    // network simulation
    UnknownNode,
    NoValidCandidate,
    BadPartition,
    BadScript,
    // gateway
    CorruptLog,
    IncompatibleVersion,
    InvalidConfig,
    AlreadyInitialized,
    BadRequest,
    NotFound,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] std::string_view name() const noexcept { return error_name(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace medalchain
