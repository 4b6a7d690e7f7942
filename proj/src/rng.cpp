#include "ridfr/rng.hpp"

#include <cstdio>
#include <string>

namespace ridfr {

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace ridfr
