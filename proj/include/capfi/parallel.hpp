/*
 * Copyright 2026 The capfi authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

// Execution policy shared by all kernels. Every parallel loop writes only to
// its own slot, so serial and parallel runs produce bit-identical results;
// the serial path doubles as the reference implementation in tests and the
// benchmark tool.

namespace capfi {

enum class ExecPolicy { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class F>
void parallel_for(ExecPolicy policy, size_t n, F&& body) {
  if (policy == ExecPolicy::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      body(static_cast<size_t>(i));
    }
    return;
#endif
  }
  for (size_t i = 0; i < n; ++i) body(i);
}

}  // namespace capfi
