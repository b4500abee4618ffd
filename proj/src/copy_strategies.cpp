#include "slrt/copybench.hpp"

#include <cstring>

namespace slrt::detail {

__attribute__((noinline)) void copy_bytes(uint8_t* dst, const uint8_t* src, size_t len) {
    for (size_t i = 0; i < len; i++) dst[i] = src[i];
}

// Callers guarantee (dst - src) % wordsize == 0; mirrors the SDK's libc copy:
// byte prologue up to word alignment, word loop, byte tail.
__attribute__((noinline)) void copy_words_congruent(uint8_t* dst, const uint8_t* src,
                                                    size_t len) {
    size_t i = 0;
    while (i < len && (reinterpret_cast<uintptr_t>(dst + i) & (sizeof(size_t) - 1)) != 0) {
        dst[i] = src[i];
        i++;
    }
    for (; i + sizeof(size_t) <= len; i += sizeof(size_t))
        *reinterpret_cast<size_t*>(dst + i) = *reinterpret_cast<const size_t*>(src + i);
    for (; i < len; i++) dst[i] = src[i];
}

__attribute__((noinline)) void copy_platform(uint8_t* dst, const uint8_t* src, size_t len) {
#if defined(__x86_64__) || defined(__i386__)
    asm volatile("rep movsb" : "+D"(dst), "+S"(src), "+c"(len) : : "memory");
#else
    std::memcpy(dst, src, len);
#endif
}

} // namespace slrt::detail
