#ifndef KARMA_ERROR_HPP
#define KARMA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace karma {

enum class ErrorKind {
    invalid_argument,
    encoding,
    config,
    io,
    runtime,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::invalid_argument, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::config, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::io, what}; }
inline Error runtime_error(const std::string& what) { return {ErrorKind::runtime, what}; }

}  // namespace karma

#endif  // KARMA_ERROR_HPP
