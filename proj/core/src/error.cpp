#include "dgn/error.hpp"

namespace dgn {

void require(bool cond, const std::string& message) {
  if (!cond) throw ValidationError(message);
}

}  // namespace dgn
