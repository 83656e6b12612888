#pragma once

#include <span>
#include <string>

namespace magedge {

/// Correctly rounded sum of `terms` (Shewchuk partials). The result does not
/// depend on term order and changes sign exactly when every term does.
double exact_sum(std::span<const double> terms);

/// Shortest round-trip decimal form, independent of the C locale. Negative
/// zero prints as 0.
std::string format_double(double value);

}  // namespace magedge
