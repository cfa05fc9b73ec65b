// SPDX-License-Identifier: Apache-2.0
//
// cfmimo user-centric cell-free massive MIMO downlink simulator
// Copyright (C) 2026 the cfmimo contributors
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

#include <cstdint>
#include <random>

namespace cfmimo {

// Independent deterministic streams derived from one user-facing seed.
// Stream tags keep layout generation, Monte Carlo trials and k-means
// initialization decoupled: changing the trial count never shifts the
// layout, and vice versa.
enum class RngStream : std::uint64_t {
    layout = 1,
    channel = 2,
    kmeans = 3,
    generic = 4,
};

inline std::mt19937_64 make_engine(std::uint64_t seed, RngStream stream,
                                   std::uint64_t substream = 0) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(static_cast<std::uint64_t>(stream)),
        static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
    return std::mt19937_64(seq);
}

} // namespace cfmimo
