// Error types shared across the library. Argument and state misuse map to
// the standard exceptions; these two carry conditions a caller may want to
// branch on (CLI exit codes distinguish them).

#pragma once

#include <stdexcept>
#include <string>

namespace sage {

// A requested configuration cannot exist (e.g. more equiangular anchors
// than the ambient dimension supports).
class infeasible_error : public std::runtime_error {
public:
    explicit infeasible_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric procedure failed (non-SPD factorization, non-finite loss).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sage
