#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chipdse {

struct Error : std::runtime_error {
	using std::runtime_error::runtime_error;
};

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
	return (a + b - 1) / b;
}

// Locale-independent number formatting for CSV/report output.
std::string fmt_g(double v, int precision = 9);

// FNV-1a, used to derive per-candidate RNG seeds that are stable across
// runs and platforms (std::hash is not).
inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
	for (int i = 0; i < 8; ++i) {
		h ^= (v >> (8 * i)) & 0xffu;
		h *= 0x100000001b3ull;
	}
	return h;
}
constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ull;

}  // namespace chipdse
