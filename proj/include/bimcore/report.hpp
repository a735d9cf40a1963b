#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bimcore {

/// Outcome of one named check inside a verification run.
struct CheckResult {
    std::string check;
    bool passed = false;
    std::string detail;
    /// Byte offset (format verification) or absent (package verification).
    std::optional<std::uint64_t> offset;
};

/// Pass/fail report of a verification run. Failures are report content, not errors.
struct VerificationReport {
    std::vector<CheckResult> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }

    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.check == name) return &c;
        return nullptr;
    }
};

} // namespace bimcore
