#include "chipdse/util.hpp"

#include <cstdio>

namespace chipdse {

std::string fmt_g(double v, int precision) {
	char buf[64];
	std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
	return buf;
}

}  // namespace chipdse
