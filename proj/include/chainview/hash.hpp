#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace chainview {

using ByteView = std::span<const std::uint8_t>;

// Incremental SHA-256 (FIPS 180-4).
class Sha256 {
 public:
  static constexpr std::size_t kDigestSize = 32;
  using Digest = std::array<std::uint8_t, kDigestSize>;

  Sha256() { reset(); }

  void reset();
  Sha256& update(ByteView data);
  Digest finalize();

 private:
  void compress(const std::uint8_t* block);

  std::array<std::uint32_t, 8> state_{};
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t buffered_ = 0;
  std::uint64_t total_bytes_ = 0;
};

// RIPEMD-160, used only for HASH160 address derivation.
class Ripemd160 {
 public:
  static constexpr std::size_t kDigestSize = 20;
  using Digest = std::array<std::uint8_t, kDigestSize>;

  Ripemd160() { reset(); }

  void reset();
  Ripemd160& update(ByteView data);
  Digest finalize();

 private:
  void compress(const std::uint8_t* block);

  std::array<std::uint32_t, 5> state_{};
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t buffered_ = 0;
  std::uint64_t total_bytes_ = 0;
};

Sha256::Digest sha256(ByteView data);

/// SHA256(SHA256(data)), internal byte order.
Sha256::Digest sha256d(ByteView data);

/// RIPEMD160(SHA256(data)).
Ripemd160::Digest hash160(ByteView data);

}  // namespace chainview
