#pragma once

#include <stdexcept>
#include <string>

namespace scgan {

// Every error thrown by the library derives from Error. The what() string
// starts with a stable category prefix so the CLI can emit single-line,
// machine-parseable "error: <category>: ..." messages.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error("usage: " + msg) {}
};

class CheckpointError : public Error {
public:
    explicit CheckpointError(const std::string& msg) : Error("checkpoint: " + msg) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error("parse: " + msg) {}
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& msg) : Error("training: " + msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric: " + msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

class PrerequisiteError : public Error {
public:
    explicit PrerequisiteError(const std::string& msg) : Error("prerequisite: " + msg) {}
};

class StaleArtifactError : public Error {
public:
    explicit StaleArtifactError(const std::string& msg) : Error("stale-artifact: " + msg) {}
};

}  // namespace scgan
