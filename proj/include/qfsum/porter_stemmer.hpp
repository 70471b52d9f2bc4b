#pragma once

#include <string>
#include <string_view>

namespace qfsum {

/// Porter (1980) stemmer, reference C variant (includes the "bli" -> "ble"
/// and "logi" -> "log" departures). Words of length <= 2 and words that are
/// not all lowercase ASCII letters are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace qfsum
