#pragma once

#include <stdexcept>
#include <string>

namespace selfloop {

// Invalid arguments are reported with std::invalid_argument throughout.

/// A loss or gradient became NaN/Inf. Carries where it happened so the
/// CLI can report it and exit with the numeric-failure code.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(std::string phase, std::string term, int iteration = -1);

    const std::string& phase() const noexcept { return phase_; }
    const std::string& term() const noexcept { return term_; }
    int iteration() const noexcept { return iteration_; }

private:
    std::string phase_;
    std::string term_;
    int iteration_;
};

/// File-system or decode failure. The message names the offending path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration schema violation (unknown key, bad type, out of range).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace selfloop
