#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace migplan {

// Every failure the planner reports to a caller. `kind` is a stable
// machine-readable tag; `reasons` lists individual violations when there is
// more than one (partition validation).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message,
        std::vector<std::string> reasons = {})
      : std::runtime_error(message),
        kind_(std::move(kind)),
        reasons_(std::move(reasons)) {}

  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<std::string>& reasons() const noexcept {
    return reasons_;
  }

 private:
  std::string kind_;
  std::vector<std::string> reasons_;
};

namespace errc {
inline constexpr const char* kMalformedDocument = "malformed-document";
inline constexpr const char* kInvariant = "invariant-violation";
inline constexpr const char* kUnknownProfile = "unknown-profile";
inline constexpr const char* kUnknownWorkload = "unknown-workload";
inline constexpr const char* kUnknownConfig = "unknown-config";
inline constexpr const char* kInvalidPlan = "invalid-plan";
inline constexpr const char* kInfeasible = "infeasible";
inline constexpr const char* kMemoryOverflow = "memory-overflow";
inline constexpr const char* kProbeBudget = "probe-budget";
inline constexpr const char* kOutOfRange = "out-of-range";
inline constexpr const char* kNoOffload = "no-offload-needed";
inline constexpr const char* kIo = "io";
}  // namespace errc

}  // namespace migplan
