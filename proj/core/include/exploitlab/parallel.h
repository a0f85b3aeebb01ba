// Copyright 2026 The ExploitLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXPLOITLAB_PARALLEL_H_
#define EXPLOITLAB_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace exploitlab {

// Worker count: EXPLOITLAB_WORKERS if set and positive, otherwise `fallback`.
int ResolveWorkerCount(int fallback = 1);

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items must not
// share mutable state. The first exception thrown by any item is rethrown.
void ParallelFor(std::size_t n, int workers,
                 const std::function<void(std::size_t)>& fn);

}  // namespace exploitlab

#endif  // EXPLOITLAB_PARALLEL_H_
