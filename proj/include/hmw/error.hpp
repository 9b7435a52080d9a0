#pragma once

#include <stdexcept>
#include <string>

namespace hmw {

// Exit-code taxonomy shared by the library and the CLI.
enum class ErrorCode : int {
    schema             = 2,
    fit_convergence    = 3,
    oracle_convergence = 4,
    io                 = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }
    int exit_code() const { return static_cast<int>(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail_schema(const std::string& msg) { throw Error(ErrorCode::schema, msg); }
[[noreturn]] inline void fail_fit(const std::string& msg) { throw Error(ErrorCode::fit_convergence, msg); }
[[noreturn]] inline void fail_oracle(const std::string& msg) { throw Error(ErrorCode::oracle_convergence, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(ErrorCode::io, msg); }

} // namespace hmw
