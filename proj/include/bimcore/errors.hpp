#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bimcore {

/// Lookup of a record, property, context entry, or AIP object that does not exist.
class NotFoundError : public std::runtime_error {
public:
    explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

/// A caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Storage-level failure (I/O, lock, corrupt store state). The store is left unchanged.
class StoreError : public std::runtime_error {
public:
    explicit StoreError(const std::string& what) : std::runtime_error(what) {}
};

/// Packaging-level failure (unreadable SIP, empty DIP selection, bad AIP layout).
class PackagingError : public std::runtime_error {
public:
    explicit PackagingError(const std::string& what) : std::runtime_error(what) {}
};

/// Structured parse failure with the byte offset of the offending input.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

} // namespace bimcore
