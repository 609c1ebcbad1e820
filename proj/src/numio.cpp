#include "dbf/numio.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <cmath>

namespace dbf {

std::string format_shortest(double value) {
  if (value == 0.0) return std::signbit(value) ? "-0" : "0";
  char buf[40];
  std::string best;
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, value);
    if (std::strtod(buf, nullptr) == value &&
        (best.empty() || std::strlen(buf) < best.size()))
      best = buf;
  }
  return best;
}

}  // namespace dbf
