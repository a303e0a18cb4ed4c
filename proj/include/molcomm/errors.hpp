#ifndef MOLCOMM_ERRORS_HPP
#define MOLCOMM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace molcomm {

/// Raised when an argument lies outside the domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised for invalid or inconsistent configuration. `key()` carries the
/// dotted key path of the offending entry when one is known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& message, std::string key = {})
        : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Raised when a numerical procedure fails (non-convergence, unreachable
/// truncation mass, inconsistent model quantities).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const char* message) {
    if (!condition) throw DomainError(message);
}

}  // namespace detail
}  // namespace molcomm

#endif  // MOLCOMM_ERRORS_HPP
