// Copyright (c) 2026 The xmodal Authors. All Rights Reserved.
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

#include <filesystem>
#include <optional>
#include <string>

#include "xmodal/embedder.hpp"
#include "xmodal/loss.hpp"

namespace xmodal {

/// Binary checkpoint layout:
///   8-byte magic "XMODALCK", uint32 version, uint64 config-JSON length,
///   config JSON, then every parameter array as little-endian float64 in
///   declaration order (encoder arrays, then head W and b when present).
inline constexpr char kCheckpointMagic[8] = {'X', 'M', 'O', 'D', 'A', 'L', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EncoderParams encoder;
  std::optional<ClassifierHead> head;
};

std::string encode_checkpoint(const EncoderParams& encoder, const ClassifierHead* head);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& encoder,
                     const ClassifierHead* head = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xmodal
