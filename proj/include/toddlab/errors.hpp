#pragma once

#include <stdexcept>
#include <string>

namespace toddlab {

enum class Errc {
    DivisionByZero,
    BitLimitExceeded,
    ModeMismatch,
    DegenerateStep,
    NotToddForm,
    NotNormalizable,
    ExactModeUnsupported,
    CandidateNotPositive,
    NotApplicable,
    InvalidSpec,
    NonPositiveState,
    InvalidArgument,
    Io,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::DivisionByZero: return "DivisionByZero";
        case Errc::BitLimitExceeded: return "BitLimitExceeded";
        case Errc::ModeMismatch: return "ModeMismatch";
        case Errc::DegenerateStep: return "DegenerateStep";
        case Errc::NotToddForm: return "NotToddForm";
        case Errc::NotNormalizable: return "NotNormalizable";
        case Errc::ExactModeUnsupported: return "ExactModeUnsupported";
        case Errc::CandidateNotPositive: return "CandidateNotPositive";
        case Errc::NotApplicable: return "NotApplicable";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::NonPositiveState: return "NonPositiveState";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

/// Domain error carrying a machine-checkable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace toddlab
