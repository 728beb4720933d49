#include "medalchain/error.hpp"

namespace medalchain {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnsupportedValue: return "UnsupportedValue";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::NonceExhausted: return "NonceExhausted";
        case ErrorCode::DifficultyOutOfRange: return "DifficultyOutOfRange";
        case ErrorCode::EmptyBlock: return "EmptyBlock";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::UnknownIssuer: return "UnknownIssuer";
        case ErrorCode::UnknownDefinition: return "UnknownDefinition";
        case ErrorCode::UnknownToken: return "UnknownToken";
        case ErrorCode::DuplicateAward: return "DuplicateAward";
        case ErrorCode::BadGrade: return "BadGrade";
        case ErrorCode::IssuerMismatch: return "IssuerMismatch";
        case ErrorCode::Unauthorized: return "Unauthorized";
        case ErrorCode::IllegalTransition: return "IllegalTransition";
        case ErrorCode::NotApproved: return "NotApproved";
        case ErrorCode::UnknownContract: return "UnknownContract";
        case ErrorCode::InactiveContract: return "InactiveContract";
        case ErrorCode::NotEligible: return "NotEligible";
        case ErrorCode::ActivityOutOfOrder: return "ActivityOutOfOrder";
        case ErrorCode::VoteNotPassing: return "VoteNotPassing";
        case ErrorCode::VoteSubjectMismatch: return "VoteSubjectMismatch";
        case ErrorCode::StaleVersion: return "StaleVersion";
        case ErrorCode::KeyTooSmall: return "KeyTooSmall";
        case ErrorCode::BadBlindingFactor: return "BadBlindingFactor";
        case ErrorCode::MessageOutOfRange: return "MessageOutOfRange";
        case ErrorCode::UnknownRound: return "UnknownRound";
        case ErrorCode::AlreadyIssued: return "AlreadyIssued";
        case ErrorCode::InvalidSignature: return "InvalidSignature";
        case ErrorCode::DuplicateSerial: return "DuplicateSerial";
        case ErrorCode::UnknownOption: return "UnknownOption";
        case ErrorCode::RoundClosed: return "RoundClosed";
        case ErrorCode::UnknownApplication: return "UnknownApplication";
        case ErrorCode::ForeignDefinition: return "ForeignDefinition";
        case ErrorCode::DanglingSample: return "DanglingSample";
        case ErrorCode::IncompleteReview: return "IncompleteReview";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::NoValidCandidate: return "NoValidCandidate";
        case ErrorCode::BadPartition: return "BadPartition";
        case ErrorCode::BadScript: return "BadScript";
        case ErrorCode::CorruptLog: return "CorruptLog";
        case ErrorCode::IncompatibleVersion: return "IncompatibleVersion";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::AlreadyInitialized: return "AlreadyInitialized";
        case ErrorCode::BadRequest: return "BadRequest";
        case ErrorCode::NotFound: return "NotFound";
    }
    return "Unknown";
}

}  // namespace medalchain
