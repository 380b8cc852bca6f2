#pragma once

#include <string>
#include <string_view>

namespace qsf {

// SHA-256 of the given bytes as lowercase hex.
std::string sha256_hex(std::string_view bytes);

// Canonical decimal form used wherever floating-point values feed a
// digest or a serialized file: "%.17g" with negative zero collapsed
// to "0", so equal doubles always print identically.
std::string canonical_number(double v);

}  // namespace qsf
