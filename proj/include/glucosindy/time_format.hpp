#pragma once

#include <string>
#include <string_view>

namespace glucosindy {

/// Parses an ISO-8601 timestamp into UTC seconds since the epoch.
/// Accepts `YYYY-MM-DDTHH:MM[:SS[.fff]]` with an optional `Z` or `±HH:MM`
/// suffix (a space may replace the `T`). A timestamp without an offset is UTC.
/// Throws InvalidArgument on malformed input.
double parse_iso8601(std::string_view text);

/// Formats UTC seconds as `YYYY-MM-DDTHH:MM:SSZ` (rounded to whole seconds).
std::string format_iso8601(double seconds);

}  // namespace glucosindy
