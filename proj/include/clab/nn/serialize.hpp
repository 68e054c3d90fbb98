/**
 * This file is part of concept-lab.
 *
 * Copyright 2026 The concept-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <iosfwd>

#include "clab/nn/network.hpp"
#include "clab/nn/train.hpp"

namespace clab::nn {

/**
 * Binary model state: the 8-byte magic "CLABPRM1", a u64 tensor count, then per
 * tensor a u64 rank, u64 dims and little-endian float64 values. Covers parameters
 * and buffers in Network::state() order.
 */
void save_state(const Network& net, std::ostream& out);

/// Loads state written by save_state into a network of the same architecture.
/// Throws ParseError on a bad magic, truncation or a shape that does not match.
void load_state(Network& net, std::istream& in);

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

}  // namespace clab::nn
