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

#include "onebit_doa/diagnostics.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>

namespace onebit
{

namespace
{
std::mutex sink_mutex;
WarningSink current_sink;
} // namespace

void warn(const std::string &message)
{
    std::lock_guard lock(sink_mutex);
    if (current_sink)
        current_sink(message);
    else
        std::cerr << "warning: " << message << '\n';
}

WarningSink set_warning_sink(WarningSink sink)
{
    std::lock_guard lock(sink_mutex);
    WarningSink previous = std::move(current_sink);
    current_sink = std::move(sink);
    return previous;
}

unsigned worker_threads()
{
    if (const char *env = std::getenv("ONEBIT_DOA_THREADS"))
    {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

} // namespace onebit
