#pragma once

#include <string>

namespace emlp {

/// Shortest text that parses back to the same double; non-finite values are
/// written as "nan", "inf" or "-inf". Always uses '.' as decimal separator.
std::string format_double(double v);

/// Inverse of format_double. Throws FormatError on malformed text.
double parse_double(const std::string& text);

}  // namespace emlp
