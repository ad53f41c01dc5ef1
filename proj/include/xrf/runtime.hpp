// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace xrf {

/// Keeps large temporaries on the heap instead of fresh mmap/munmap pairs
/// (glibc only; a no-op elsewhere). Training allocates many short-lived
/// matrices above the default mmap threshold, and the page faults otherwise
/// dominate the run time. Numerical results are unaffected.
void configure_allocator();

}  // namespace xrf
