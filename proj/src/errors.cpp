#include "nbr/errors.hpp"

namespace nbr {

const char* validation_code_name(ValidationError::Code code) {
  switch (code) {
    case ValidationError::Code::checksum_mismatch: return "checksum_mismatch";
    case ValidationError::Code::missing_instances: return "missing_instances";
    case ValidationError::Code::unexpected_instance: return "unexpected_instance";
    case ValidationError::Code::duplicate_item: return "duplicate_item";
    case ValidationError::Code::unknown_item: return "unknown_item";
    case ValidationError::Code::capacity_exceeded: return "capacity_exceeded";
    case ValidationError::Code::bad_record: return "bad_record";
  }
  return "unknown";
}

}  // namespace nbr
