#include "fbmreg/platform.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace fbmreg {

void configure_allocator() noexcept {
#if defined(__GLIBC__)
    constexpr int kLarge = 1 << 30;
    mallopt(M_MMAP_THRESHOLD, kLarge);
    mallopt(M_TRIM_THRESHOLD, kLarge);
#endif
}

}  // namespace fbmreg
