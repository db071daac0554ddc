#include "chipdse/bigint.hpp"

#include <algorithm>
#include <stdexcept>

namespace chipdse {

BigUint::BigUint(std::uint64_t v) {
	if (v) limbs_.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
	if (v >> 32) limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
}

void BigUint::trim() {
	while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
}

BigUint& BigUint::operator+=(const BigUint& o) {
	limbs_.resize(std::max(limbs_.size(), o.limbs_.size()), 0);
	std::uint64_t carry = 0;
	for (size_t i = 0; i < limbs_.size(); ++i) {
		std::uint64_t s = carry + limbs_[i];
		if (i < o.limbs_.size()) s += o.limbs_[i];
		limbs_[i] = static_cast<std::uint32_t>(s);
		carry = s >> 32;
	}
	if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
	return *this;
}

BigUint& BigUint::mul_u32(std::uint32_t m) {
	if (m == 0) {
		limbs_.clear();
		return *this;
	}
	std::uint64_t carry = 0;
	for (auto& limb : limbs_) {
		std::uint64_t p = static_cast<std::uint64_t>(limb) * m + carry;
		limb = static_cast<std::uint32_t>(p);
		carry = p >> 32;
	}
	while (carry) {
		limbs_.push_back(static_cast<std::uint32_t>(carry));
		carry >>= 32;
	}
	return *this;
}

BigUint& BigUint::mul_u64(std::uint64_t m) {
	std::uint32_t lo = static_cast<std::uint32_t>(m);
	std::uint32_t hi = static_cast<std::uint32_t>(m >> 32);
	if (hi == 0) return mul_u32(lo);
	BigUint high_part = *this;
	high_part.mul_u32(hi).shl_bits(32);
	mul_u32(lo);
	return *this += high_part;
}

BigUint& BigUint::shl_bits(unsigned bits) {
	if (is_zero()) return *this;
	unsigned words = bits / 32, rem = bits % 32;
	if (rem) {
		std::uint32_t carry = 0;
		for (auto& limb : limbs_) {
			std::uint32_t nc = limb >> (32 - rem);
			limb = (limb << rem) | carry;
			carry = nc;
		}
		if (carry) limbs_.push_back(carry);
	}
	limbs_.insert(limbs_.begin(), words, 0);
	return *this;
}

std::strong_ordering BigUint::operator<=>(const BigUint& o) const {
	if (limbs_.size() != o.limbs_.size())
		return limbs_.size() <=> o.limbs_.size();
	for (size_t i = limbs_.size(); i-- > 0;) {
		if (limbs_[i] != o.limbs_[i]) return limbs_[i] <=> o.limbs_[i];
	}
	return std::strong_ordering::equal;
}

std::string BigUint::str() const {
	if (is_zero()) return "0";
	std::vector<std::uint32_t> work = limbs_;
	std::string out;
	while (!work.empty()) {
		// divmod by 1e9
		std::uint64_t rem = 0;
		for (size_t i = work.size(); i-- > 0;) {
			std::uint64_t cur = (rem << 32) | work[i];
			work[i] = static_cast<std::uint32_t>(cur / 1000000000ull);
			rem = cur % 1000000000ull;
		}
		while (!work.empty() && work.back() == 0) work.pop_back();
		std::string chunk = std::to_string(rem);
		if (work.empty()) {
			out = chunk + out;
		} else {
			out = std::string(9 - chunk.size(), '0') + chunk + out;
		}
	}
	return out;
}

std::uint64_t binom_u64(int n, int k) {
	if (k < 0 || k > n) return 0;
	if (k > n - k) k = n - k;
	unsigned __int128 r = 1;
	for (int i = 1; i <= k; ++i) {
		r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
	}
	if (r > ~0ull) throw std::overflow_error("binom_u64 overflow");
	return static_cast<std::uint64_t>(r);
}

std::uint64_t partition_count(int m) {
	if (m < 0) return 0;
	std::vector<std::uint64_t> p(m + 1, 0);
	p[0] = 1;
	for (int part = 1; part <= m; ++part) {
		for (int n = part; n <= m; ++n) p[n] += p[n - part];
	}
	return p[m];
}

}  // namespace chipdse
