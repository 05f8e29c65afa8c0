#pragma once

#include <filesystem>
#include <string>

#include "pinnrc/net.hpp"

namespace pinnrc {

// Model checkpoint, all integers and doubles little-endian:
//
//   offset  size     field
//   0       8        header "PINNRC" followed by a uint16 format version (1)
//   8       8        uint64 number of layer sizes n
//   16      8*n      uint64 layer sizes, input first
//   16+8n   8        uint64 activation id (0 = tanh hidden, identity output)
//   24+8n   8*P      float64 parameters, per layer: weights row-major
//                    (out x in), then biases
//
// P is implied by the layer sizes; trailing bytes are rejected.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string checkpoint_bytes(const Mlp& net);
Mlp mlp_from_checkpoint_bytes(const std::string& bytes);

void save_checkpoint(const Mlp& net, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace pinnrc
