#pragma once

#include <stdexcept>
#include <string>

namespace oid {

// Machine-readable failure categories. The CLI serializes these as the
// "code" field of its JSON error record.
enum class ErrorCode {
  kScaling,
  kIntegration,
  kOverflow,
  kUnderflow,
  kVoltageUnreachable,
  kNonMonotoneOcv,
  kSaturation,
  kSimulation,
  kData,
  kConfig,
  kComparison,
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace oid
