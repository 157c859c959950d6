#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace a2a {

/// Invalid topology, algorithm or parameter configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A schedule that cannot execute: unmatched send/receive inside a step,
/// segment outside its buffer, size mismatch between send and receive.
class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output of an all-to-all differs from the reference transpose.
class CorrectnessError : public std::runtime_error {
 public:
  CorrectnessError(const std::string& what, int rank, std::size_t block,
                   std::size_t byte)
      : std::runtime_error(what), rank_(rank), block_(block), byte_(byte) {}

  int rank() const noexcept { return rank_; }
  std::size_t block() const noexcept { return block_; }
  std::size_t byte() const noexcept { return byte_; }

 private:
  int rank_;
  std::size_t block_;
  std::size_t byte_;
};

}  // namespace a2a
