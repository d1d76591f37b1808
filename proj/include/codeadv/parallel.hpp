// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace codeadv {

// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = all cores).
// If calls throw, the exception of the lowest index is rethrown after all
// workers finish.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace codeadv
