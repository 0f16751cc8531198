#include "simready/common/binary_io.h"

#include <cstdio>
#include <string>

namespace simready::io {

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace simready::io
