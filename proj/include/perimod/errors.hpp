// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace perimod {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed document text. `byte_offset` is 0 when the position is unknown.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, std::size_t byte_offset = 0)
        : Error(msg), byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

/// A structurally valid document that violates a type invariant. The message
/// names the invariant.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

/// A reference to a register or register field that is not present in the
/// instance's universes.
class DanglingReference : public Error {
public:
    DanglingReference(const std::string& msg, std::string entity)
        : Error(msg), entity(std::move(entity)) {}
    std::string entity;
};

/// Failure to turn a raw string into an integer. `trace` records each step of
/// the resolution cascade that was tried; `slot_paths` lists the offending
/// document slots when the failure came from a whole-document resolution.
class ResolveError : public Error {
public:
    ResolveError(const std::string& msg, std::vector<std::string> trace = {},
                 std::vector<std::string> slot_paths = {})
        : Error(msg), trace(std::move(trace)), slot_paths(std::move(slot_paths)) {}
    std::vector<std::string> trace;
    std::vector<std::string> slot_paths;
};

/// Mutually recursive object-like macros. `cycle` names the participants.
class MacroCycleError : public Error {
public:
    MacroCycleError(const std::string& msg, std::vector<std::string> cycle)
        : Error(msg), cycle(std::move(cycle)) {}
    std::vector<std::string> cycle;
};

/// Access to an address no device or RAM range claims, or an access shape a
/// register cannot serve.
class BusFault : public Error {
public:
    BusFault(const std::string& msg, std::uint64_t addr)
        : Error(msg), addr(addr) {}
    std::uint64_t addr;
};

/// Invalid machine assembly (overlapping MMIO ranges, RAM collision, ...).
class MachineBuildError : public Error {
public:
    using Error::Error;
};

/// Bad CLI or pipeline configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A prompt template placeholder the context did not supply.
class PromptError : public Error {
public:
    using Error::Error;
};

} // namespace perimod
