#pragma once

#include <stdexcept>
#include <string>

namespace mindcube::wire {

enum class WireErrc {
    InputTooLong,
    MalformedFrame,
    InvalidFrame,
    CrcMismatch,
    UnsupportedVersion,
};

const char* to_string(WireErrc code);

class WireError : public std::runtime_error {
public:
    WireError(WireErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    WireErrc code() const noexcept { return code_; }

private:
    WireErrc code_;
};

}  // namespace mindcube::wire
