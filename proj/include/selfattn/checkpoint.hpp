#pragma once

#include "selfattn/data.hpp"
#include "selfattn/model.hpp"
#include "selfattn/training.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace selfattn {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char checkpoint_magic[8] = {'S', 'E', 'L', 'F', 'A', 'T', 'T', 'N'};
inline constexpr std::uint32_t checkpoint_version = 1;

struct Checkpoint {
  Model<float> model;
  TrainConfig train;
  Vocab vocab;
};

/**
 * Binary layout, integers little-endian:
 *
 *   magic "SELFATTN" | u32 version
 *   u32 n + config snapshot ("key = value" lines, includes flatten_order)
 *   u32 count, then per token: u32 n + UTF-8 bytes
 *   u32 tensors, then per tensor: u32 n + name, u32 rank, u64 dims[rank], u8 dtype (1 = f32)
 *   payloads: row-major little-endian f32, manifest order
 */
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CheckpointError unless the checkpoint's tensors have the shapes `expected` implies.
/// A zero vocab_size in `expected` accepts any vocabulary size.
void require_compatible(const Checkpoint& checkpoint, ModelConfig expected);

}  // namespace selfattn
