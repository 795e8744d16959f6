// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "sarc/trainer.hpp"

namespace sarc {

// Checkpoint layout:
//   line 1   single-line JSON header terminated by '\n':
//            {"format":"sarc-checkpoint","version":1,"dims":{...},"kind":{...},
//             "hyperparams":{...},"seed":S,"history":[...],
//             "tensors":[{"name":..,"shape":[r,c]},...],"tensor_bytes":B}
//   rest     B bytes of little-endian binary32 values, tensors in
//            ModelParams::tensors() order, each row-major.
// Weights are narrowed to binary32 on save.
std::vector<char> encode_checkpoint(const TrainedModel& m);
TrainedModel decode_checkpoint(const std::vector<char>& bytes);

void save_checkpoint(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace sarc
