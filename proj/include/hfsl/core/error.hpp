#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hfsl {

// Root of every error the library throws. Callers that only care about
// "something in hfsl failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// A documented precondition was violated by the caller (stale cache,
// unclamped propensity, double preprocessing, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DegenerateLabelsError : public Error {
public:
    using Error::Error;
};

class StratificationError : public Error {
public:
    using Error::Error;
};

class EvaluationInfeasible : public Error {
public:
    using Error::Error;
};

class AuditInfeasible : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace hfsl
