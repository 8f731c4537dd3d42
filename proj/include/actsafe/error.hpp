#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace actsafe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define ACTSAFE_DEFINE_ERROR(Name)                      \
    class Name : public Error {                         \
    public:                                             \
        explicit Name(const std::string& what)          \
            : Error(#Name ": " + what) {}               \
    }

ACTSAFE_DEFINE_ERROR(UnknownActivity);
ACTSAFE_DEFINE_ERROR(MismatchedCorpus);
ACTSAFE_DEFINE_ERROR(EmptyLog);
ACTSAFE_DEFINE_ERROR(NoTargetOccurrences);
ACTSAFE_DEFINE_ERROR(NoHistory);
ACTSAFE_DEFINE_ERROR(InsufficientHistory);
ACTSAFE_DEFINE_ERROR(EmptyTrainingSet);
ACTSAFE_DEFINE_ERROR(DivergedLoss);
ACTSAFE_DEFINE_ERROR(ShapeMismatch);
ACTSAFE_DEFINE_ERROR(LengthMismatch);
ACTSAFE_DEFINE_ERROR(UnconfiguredDaypart);
ACTSAFE_DEFINE_ERROR(MissingBehavior);
ACTSAFE_DEFINE_ERROR(EmptySchedule);
ACTSAFE_DEFINE_ERROR(EmptyCohort);
ACTSAFE_DEFINE_ERROR(ConfigError);
ACTSAFE_DEFINE_ERROR(ModelFormatError);

#undef ACTSAFE_DEFINE_ERROR

/// Constraint record could not be parsed; `position` is a byte offset into the record text.
class MalformedRecord : public Error {
public:
    MalformedRecord(const std::string& what, std::size_t position)
        : Error("MalformedRecord at " + std::to_string(position) + ": " + what),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Errors tied to a 1-based input line.
class LineError : public Error {
public:
    LineError(const std::string& kind, const std::string& what, std::size_t line)
        : Error(kind + " (line " + std::to_string(line) + "): " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class BadTimestamp : public LineError {
public:
    BadTimestamp(const std::string& what, std::size_t line) : LineError("BadTimestamp", what, line) {}
};

class UnknownBehavior : public LineError {
public:
    UnknownBehavior(const std::string& what, std::size_t line)
        : LineError("UnknownBehavior", what, line) {}
};

/// Raised by the pipeline runner; carries the stage that failed.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace actsafe
