#pragma once

#include <stdexcept>
#include <string>

namespace lordnet {

// Base of every error raised by the library. The CLI maps the category
// onto its exit code.
class Error : public std::runtime_error {
 public:
  enum class Kind { Shape, Domain, Config, Parse, Validation, Capacity, Numerical, Training, Consistency };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

#define LORDNET_DEFINE_ERROR(Name, KindTag)                                  \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what) : Error(Kind::KindTag, what) {}   \
  };

LORDNET_DEFINE_ERROR(ShapeError, Shape)
LORDNET_DEFINE_ERROR(DomainError, Domain)
LORDNET_DEFINE_ERROR(ConfigError, Config)
LORDNET_DEFINE_ERROR(ParseError, Parse)
LORDNET_DEFINE_ERROR(ValidationError, Validation)
LORDNET_DEFINE_ERROR(CapacityError, Capacity)
LORDNET_DEFINE_ERROR(NumericalError, Numerical)
LORDNET_DEFINE_ERROR(TrainingError, Training)
LORDNET_DEFINE_ERROR(ConsistencyError, Consistency)

#undef LORDNET_DEFINE_ERROR

namespace detail {

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace detail

}  // namespace lordnet
