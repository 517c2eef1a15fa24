#pragma once

#include <stdexcept>
#include <string>

namespace armpose {

/// Base of every domain error. `code()` is the stable machine-readable name
/// the CLI prints in its structured error output.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define ARMPOSE_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(#Name, what) {}   \
  };

ARMPOSE_DEFINE_ERROR(ParseError)
ARMPOSE_DEFINE_ERROR(ModelInvariantError)
ARMPOSE_DEFINE_ERROR(JointLimitError)
ARMPOSE_DEFINE_ERROR(BehindCameraError)
ARMPOSE_DEFINE_ERROR(InsufficientKeypointsError)
ARMPOSE_DEFINE_ERROR(NoConvergenceError)
ARMPOSE_DEFINE_ERROR(SamplingExhaustedError)
ARMPOSE_DEFINE_ERROR(IoError)
ARMPOSE_DEFINE_ERROR(EmptyEvalError)
ARMPOSE_DEFINE_ERROR(MissingPairError)
ARMPOSE_DEFINE_ERROR(UnreachableError)
ARMPOSE_DEFINE_ERROR(InvalidArgumentError)

#undef ARMPOSE_DEFINE_ERROR

}  // namespace armpose
