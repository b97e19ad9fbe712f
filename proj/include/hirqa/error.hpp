#pragma once

#include <stdexcept>
#include <string>

namespace hirqa {

enum class Errc {
    unreadable_file,
    unsupported_format,
    corrupt_data,
    invalid_argument,
    io_error,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::unreadable_file:    return "unreadable_file";
        case Errc::unsupported_format: return "unsupported_format";
        case Errc::corrupt_data:       return "corrupt_data";
        case Errc::invalid_argument:   return "invalid_argument";
        case Errc::io_error:           return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace hirqa
