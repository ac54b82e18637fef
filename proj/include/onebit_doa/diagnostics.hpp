// SPDX-License-Identifier: Apache-2.0
//
// onebit-doa: direction-of-arrival estimation from dithered one-bit array data
// Copyright (C) 2026 The onebit-doa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <functional>
#include <string>

namespace onebit
{

// Non-fatal warnings (aliasing spacing, dynamic-range violations). The default
// sink writes "warning: <msg>" to stderr; tests install their own.
using WarningSink = std::function<void(const std::string &)>;

void warn(const std::string &message);

// Returns the previous sink. Passing an empty function restores the default.
WarningSink set_warning_sink(WarningSink sink);

// Worker thread cap from ONEBIT_DOA_THREADS, else hardware concurrency (at least 1).
unsigned worker_threads();

} // namespace onebit
