#pragma once

#include <stdexcept>
#include <string>

namespace rtv {

struct SourcePos {
    int line = 0;    // 1-based; 0 = unknown
    int column = 0;  // 1-based
};

inline std::string to_string(SourcePos pos) {
    return "line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column);
}

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lexical/syntactic/sort errors carry the offending position.
struct ParseError : Error {
    SourcePos pos;
    ParseError(const std::string& msg, SourcePos p)
        : Error(msg + " (" + rtv::to_string(p) + ")"), pos(p) {}
};

struct SchemaError : Error {
    using Error::Error;
};

// Backend transport or reply-format failure.
struct BackendError : Error {
    using Error::Error;
};

// A formal stage exhausted its correction attempts.
struct WellformednessError : Error {
    int attempts;
    std::string last_error;
    WellformednessError(int attempts_, const std::string& last)
        : Error("wellformedness-exhausted after " + std::to_string(attempts_) +
                " attempts; last error: " + last),
          attempts(attempts_),
          last_error(last) {}
};

// Solver or scorer produced an unparseable reply.
struct ProtocolError : Error {
    using Error::Error;
};

struct StorageError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Pipeline errors tagged with the stage (1..3) that raised them.
struct StageError : Error {
    int stage;
    StageError(int stage_, const std::string& msg)
        : Error("stage " + std::to_string(stage_) + ": " + msg), stage(stage_) {}
};

}  // namespace rtv
