#include "omnitraj/error.hpp"

namespace omnitraj {

void require(bool condition, std::string_view message) {
  if (!condition) throw ParameterError(std::string(message));
}

}  // namespace omnitraj
