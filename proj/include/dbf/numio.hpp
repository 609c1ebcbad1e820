#pragma once

#include <string>

namespace dbf {

/// Shortest decimal string that parses back to exactly the same double.
/// Dyadic rationals and short decimals come out in their exact form
/// ("0.03125", "-0.18109"), not padded to 17 digits.
std::string format_shortest(double value);

}  // namespace dbf
