#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gausstin {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define GAUSSTIN_ERROR_TYPE(Name)                    \
    class Name : public Error {                      \
      public:                                        \
        using Error::Error;                          \
    }

GAUSSTIN_ERROR_TYPE(TooFewSamples);
GAUSSTIN_ERROR_TYPE(NonFiniteInput);
GAUSSTIN_ERROR_TYPE(DimensionMismatch);
GAUSSTIN_ERROR_TYPE(UnknownCategory);
GAUSSTIN_ERROR_TYPE(KOutOfRange);
GAUSSTIN_ERROR_TYPE(InvalidSpec);
GAUSSTIN_ERROR_TYPE(EmptyCandidates);
GAUSSTIN_ERROR_TYPE(CapacityExceeded);
GAUSSTIN_ERROR_TYPE(LabelOutOfRange);
GAUSSTIN_ERROR_TYPE(EmptyEval);
GAUSSTIN_ERROR_TYPE(IndexError);
GAUSSTIN_ERROR_TYPE(EmptySummary);
GAUSSTIN_ERROR_TYPE(ConfigError);

#undef GAUSSTIN_ERROR_TYPE

// Parse failure in a line-oriented input file. line is 1-based; 0 means the
// failure is file-level rather than tied to a single line.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

}  // namespace gausstin
