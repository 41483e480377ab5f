#pragma once

namespace fbmreg {

/// Keeps large matrix buffers on the heap instead of fresh mmap regions.
/// Every likelihood evaluation allocates several megabytes of temporaries;
/// where page faults are expensive this halves the evaluation cost. Intended
/// to be called once at program start; a no-op outside glibc.
void configure_allocator() noexcept;

}  // namespace fbmreg
