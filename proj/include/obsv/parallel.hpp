// Copyright 2026 The obsv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>

namespace obsv {

/// Worker count: OBSV_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
int worker_count();

/// Runs fn(0..count-1) on up to worker_count() threads. Each index must write
/// only its own slot of the output. If any call throws, the exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace obsv
