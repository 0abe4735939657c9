#include "msense/error.hpp"

namespace msense {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDepth: return "invalid-depth";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kBehindCamera: return "behind-camera";
    case ErrorCode::kNoDepth: return "no-depth";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kNoOverlap: return "no-overlap";
    case ErrorCode::kLifecycle: return "lifecycle";
    case ErrorCode::kOrdering: return "ordering";
    case ErrorCode::kLogWrite: return "log-write";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kInput: return "input";
  }
  return "unknown";
}

}  // namespace msense
