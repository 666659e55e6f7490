#pragma once

#include <stdexcept>
#include <string>

namespace voxtherm {

/// Broad failure class; maps onto CLI exit codes.
enum class ErrorClass { Usage, Validation, Numeric, Io };

/// Base of every error raised by the library. `category()` is the
/// machine-readable tag printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string category, ErrorClass cls, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)), class_(cls) {}

  const std::string& category() const noexcept { return category_; }
  ErrorClass error_class() const noexcept { return class_; }

 private:
  std::string category_;
  ErrorClass class_;
};

#define VOXTHERM_DEFINE_ERROR(Name, Class)                                  \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message)                               \
        : Error(#Name, ErrorClass::Class, message) {}                       \
  };

VOXTHERM_DEFINE_ERROR(UsageError, Usage)
VOXTHERM_DEFINE_ERROR(SchemaError, Validation)
VOXTHERM_DEFINE_ERROR(ValidationError, Validation)
VOXTHERM_DEFINE_ERROR(InvalidRange, Validation)
VOXTHERM_DEFINE_ERROR(MissingEntry, Validation)
VOXTHERM_DEFINE_ERROR(ShapeMismatch, Validation)
VOXTHERM_DEFINE_ERROR(NotScalar, Validation)
VOXTHERM_DEFINE_ERROR(StaleTape, Validation)
VOXTHERM_DEFINE_ERROR(EmptySamples, Validation)
VOXTHERM_DEFINE_ERROR(EmptyDataset, Validation)
VOXTHERM_DEFINE_ERROR(RotationShapeError, Validation)
VOXTHERM_DEFINE_ERROR(NonConvergence, Numeric)
VOXTHERM_DEFINE_ERROR(Diverged, Numeric)
VOXTHERM_DEFINE_ERROR(IoError, Io)

#undef VOXTHERM_DEFINE_ERROR

}  // namespace voxtherm
