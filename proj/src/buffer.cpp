#include "a2a/buffer.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "a2a/error.hpp"

namespace a2a {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv_u64(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

BlockBuffer::BlockBuffer(Rank owner, std::size_t n_blocks,
                         std::size_t block_bytes)
    : owner_(owner), block_bytes_(block_bytes) {
  if (block_bytes == 0) throw ConfigError("block size must be >= 1 byte");
  data_.assign(n_blocks * block_bytes, std::byte{0});
}

std::span<std::byte> BlockBuffer::block(std::size_t i) {
  if (i >= n_blocks()) {
    throw std::out_of_range(fmt::format("block {} of {}", i, n_blocks()));
  }
  return std::span<std::byte>(data_).subspan(i * block_bytes_, block_bytes_);
}

std::span<const std::byte> BlockBuffer::block(std::size_t i) const {
  if (i >= n_blocks()) {
    throw std::out_of_range(fmt::format("block {} of {}", i, n_blocks()));
  }
  return std::span<const std::byte>(data_).subspan(i * block_bytes_,
                                                   block_bytes_);
}

std::uint64_t payload_hash(std::uint64_t src, std::uint64_t dst,
                           std::uint64_t index) {
  std::uint64_t h = kFnvOffset;
  h = fnv_u64(h, src);
  h = fnv_u64(h, dst);
  h = fnv_u64(h, index);
  return h;
}

std::vector<BlockBuffer> seed_payload(const Topology& topo,
                                      std::size_t block_bytes) {
  const auto p = static_cast<std::size_t>(topo.size());
  std::vector<BlockBuffer> out;
  out.reserve(p);
  for (Rank src = 0; src < topo.size(); ++src) {
    BlockBuffer buf(src, p, block_bytes);
    for (Rank dst = 0; dst < topo.size(); ++dst) {
      auto blk = buf.block(static_cast<std::size_t>(dst));
      for (std::size_t j = 0; j < block_bytes; ++j) {
        blk[j] = payload_byte(src, dst, j);
      }
    }
    out.push_back(std::move(buf));
  }
  return out;
}

std::vector<BlockBuffer> oracle_transpose(
    const Topology& topo, const std::vector<BlockBuffer>& inputs) {
  const auto p = static_cast<std::size_t>(topo.size());
  if (inputs.size() != p) {
    throw ConfigError(
        fmt::format("expected {} input buffers, got {}", p, inputs.size()));
  }
  const std::size_t s = p == 0 ? 0 : inputs.front().block_bytes();
  std::vector<BlockBuffer> out;
  out.reserve(p);
  for (std::size_t r = 0; r < p; ++r) {
    if (inputs[r].n_blocks() != p || inputs[r].block_bytes() != s) {
      throw ConfigError(fmt::format("input buffer of rank {} has wrong shape", r));
    }
    BlockBuffer buf(static_cast<Rank>(r), p, s);
    for (std::size_t i = 0; i < p; ++i) {
      std::ranges::copy(inputs[i].block(r), buf.block(i).begin());
    }
    out.push_back(std::move(buf));
  }
  return out;
}

std::optional<Mismatch> first_mismatch(
    const std::vector<BlockBuffer>& actual,
    const std::vector<BlockBuffer>& expected) {
  const std::size_t n = std::min(actual.size(), expected.size());
  for (std::size_t r = 0; r < n; ++r) {
    const auto a = actual[r].bytes();
    const auto e = expected[r].bytes();
    const std::size_t s = std::max<std::size_t>(expected[r].block_bytes(), 1);
    const std::size_t len = std::min(a.size(), e.size());
    auto [ia, ie] = std::mismatch(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(len), e.begin());
    std::size_t at = static_cast<std::size_t>(ia - a.begin());
    if (at == len && a.size() == e.size()) continue;
    return Mismatch{static_cast<Rank>(r), at / s, at % s};
  }
  if (actual.size() != expected.size()) {
    return Mismatch{static_cast<Rank>(n), 0, 0};
  }
  return std::nullopt;
}

}  // namespace a2a
