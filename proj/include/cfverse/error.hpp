#pragma once

#include <stdexcept>
#include <string>

namespace cfverse {

// Base class for every error raised by the library. Callers that only care
// about "did it work" catch this; the subclasses let the CLI and the HTTP
// service map failures onto exit codes and status codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Missing or malformed feature schema / column layout.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& column)
        : Error("schema error: " + column), column_(column) {}
    SchemaError(const std::string& column, const std::string& detail)
        : Error("schema error: " + column + ": " + detail), column_(column) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

// Unparseable input cell. Row numbers are 1-based data rows (header excluded).
class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& column, const std::string& detail)
        : Error("parse error at row " + std::to_string(row) + ", column '" + column + "': " + detail),
          row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

// A precondition on an argument does not hold.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Lookup of a vertex, session or graph that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Concurrent mutation of a serialized resource lost the race.
class ConflictError : public Error {
public:
    using Error::Error;
};

// The instance under explanation already receives the desired outcome.
class NothingToExplainError : public Error {
public:
    using Error::Error;
};

}  // namespace cfverse
