#ifndef AUSCULT_ERRORS_HPP
#define AUSCULT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace auscult {

enum class Errc {
    invalid_argument,
    invalid_band,
    io,
    format,
    config,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

} // namespace auscult

#endif
