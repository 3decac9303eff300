#include "sdmia/common/error.hpp"

namespace sdmia {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "Validation";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kUnprobeable: return "Unprobeable";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kBudgetExhausted: return "BudgetExhausted";
    case ErrorCode::kBackend: return "Backend";
    case ErrorCode::kCacheMiss: return "CacheMiss";
    case ErrorCode::kRefused: return "Refused";
    case ErrorCode::kUnscorable: return "Unscorable";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace sdmia
