#pragma once

#include <stdexcept>

namespace disj {

// Resource-limit violations (dense-table caps, pair-count guards).
struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Arguments outside an operation's stated domain.
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace disj
