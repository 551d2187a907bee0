#pragma once

#include <stdexcept>
#include <string>

namespace equalizer {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used by the command line front end for machine-parseable failure lines.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define EQUALIZER_DEFINE_ERROR(Name, tag)                  \
  class Name : public Error {                              \
   public:                                                 \
    explicit Name(const std::string& what) : Error(tag, what) {} \
  };

EQUALIZER_DEFINE_ERROR(DimensionError, "dimension")
EQUALIZER_DEFINE_ERROR(NumericError, "numeric")
EQUALIZER_DEFINE_ERROR(ContractError, "contract")
EQUALIZER_DEFINE_ERROR(LookupError, "lookup")
EQUALIZER_DEFINE_ERROR(ParseError, "parse")
EQUALIZER_DEFINE_ERROR(CapacityError, "capacity")
EQUALIZER_DEFINE_ERROR(FileError, "file")
EQUALIZER_DEFINE_ERROR(ConfigError, "config")

#undef EQUALIZER_DEFINE_ERROR

}  // namespace equalizer
