#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmcmono {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression, model file, region string or results file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        std::string loc;
        if (line > 0) loc += "line " + std::to_string(line);
        if (column > 0) {
            if (!loc.empty()) loc += ", ";
            loc += "column " + std::to_string(column);
        }
        return loc.empty() ? what : loc + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

/// The model violates a structural or semantic requirement.
class ModelError : public Error {
public:
    enum class Kind {
        RowSumMismatch,
        GraphPreservationViolated,
        GraphPreservationUnknown,
        NotWellDefined,
        InitialStateIsBottom,
        InitialStateIsTop,
        NotCollapsed,
        NotSupported,
        EliminatingAbsorbingLoop,
        Other,
    };

    ModelError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// An intermediate expression exceeded the configured term cap.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Arithmetic error such as division by the zero rational function.
class MathError : public Error {
public:
    using Error::Error;
};

} // namespace pmcmono
