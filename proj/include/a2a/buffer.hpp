#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "a2a/topology.hpp"

namespace a2a {

/// A rank's all-to-all payload: one block of `block_bytes` per peer rank,
/// stored contiguously so that block i starts at byte i * block_bytes.
class BlockBuffer {
 public:
  BlockBuffer() = default;
  /// Zero-filled buffer of `n_blocks` blocks. Throws ConfigError if
  /// block_bytes is zero.
  BlockBuffer(Rank owner, std::size_t n_blocks, std::size_t block_bytes);

  Rank owner() const noexcept { return owner_; }
  std::size_t block_bytes() const noexcept { return block_bytes_; }
  std::size_t n_blocks() const noexcept {
    return block_bytes_ == 0 ? 0 : data_.size() / block_bytes_;
  }

  std::span<std::byte> block(std::size_t i);
  std::span<const std::byte> block(std::size_t i) const;

  std::span<std::byte> bytes() noexcept { return data_; }
  std::span<const std::byte> bytes() const noexcept { return data_; }

  friend bool operator==(const BlockBuffer&, const BlockBuffer&) = default;

 private:
  Rank owner_ = 0;
  std::size_t block_bytes_ = 0;
  std::vector<std::byte> data_;
};

/// FNV-1a-64 of the 24-byte little-endian encoding of (src, dst, index).
std::uint64_t payload_hash(std::uint64_t src, std::uint64_t dst,
                           std::uint64_t index);

/// Byte `index` of the block that `src` sends to `dst`.
inline std::byte payload_byte(Rank src, Rank dst, std::uint64_t index) {
  return static_cast<std::byte>(
      payload_hash(static_cast<std::uint64_t>(src),
                   static_cast<std::uint64_t>(dst), index) &
      0xffu);
}

/// Deterministic input buffers: block `dst` of rank `src` holds
/// payload_byte(src, dst, j) at byte j.
std::vector<BlockBuffer> seed_payload(const Topology& topo,
                                      std::size_t block_bytes);

/// Reference all-to-all: output block i of rank r is input block r of rank i.
std::vector<BlockBuffer> oracle_transpose(const Topology& topo,
                                          const std::vector<BlockBuffer>& inputs);

struct Mismatch {
  Rank rank = 0;
  std::size_t block = 0;
  std::size_t byte = 0;
};

/// First differing (rank, block, byte) between two buffer sets, scanning
/// ranks, then blocks, then bytes in ascending order.
std::optional<Mismatch> first_mismatch(const std::vector<BlockBuffer>& actual,
                                       const std::vector<BlockBuffer>& expected);

}  // namespace a2a
