// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace ticon {

/// Worker count used by parallel_for; 1 (the default) runs inline.
void set_thread_count(std::size_t n);
std::size_t thread_count() noexcept;

/// Calls fn(i) once for every i in [0, n). Callers write results into
/// per-index slots, so output does not depend on the thread count. The
/// first exception thrown is rethrown after all workers have stopped.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ticon
