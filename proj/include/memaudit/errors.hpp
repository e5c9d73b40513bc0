#pragma once

#include <stdexcept>

namespace memaudit {

/// Bad configuration: unknown scheme, vocab overflow, k above the seam
/// guarantee, missing paths. Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent data: unreadable source, digest mismatch, contract
/// violations in inputs. Maps to CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace memaudit
