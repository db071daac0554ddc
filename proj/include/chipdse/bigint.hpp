#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace chipdse {

// Unsigned arbitrary-precision integer, base 2^32. Only what the mapping
// space-size formulas need: add, multiply by machine word, shift, compare,
// decimal printing.
class BigUint {
public:
	BigUint() = default;
	explicit BigUint(std::uint64_t v);

	BigUint& operator+=(const BigUint& o);
	BigUint& mul_u64(std::uint64_t m);
	BigUint& shl_bits(unsigned bits);

	bool is_zero() const { return limbs_.empty(); }
	bool operator==(const BigUint& o) const = default;
	std::strong_ordering operator<=>(const BigUint& o) const;

	std::string str() const;

private:
	std::vector<std::uint32_t> limbs_;  // little-endian, no leading zeros
	void trim();
	BigUint& mul_u32(std::uint32_t m);
};

// Exact binomial coefficient for n <= 66 (result must fit in uint64).
std::uint64_t binom_u64(int n, int k);

// Number of integer partitions of m, m <= 100.
std::uint64_t partition_count(int m);

}  // namespace chipdse
