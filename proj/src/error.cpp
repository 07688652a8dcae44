#include "gazessl/error.hpp"

namespace gazessl {

void throw_invalid(const std::string& where, const std::string& what) {
  throw InvalidInput(where + ": " + what);
}

}  // namespace gazessl
