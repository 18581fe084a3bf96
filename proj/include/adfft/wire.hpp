#pragma once

// Socket wire format.
//
// Each message is a 20-byte little-endian header
//
//   offset 0   u32  phase
//   offset 4   u32  source rank
//   offset 8   u32  destination rank
//   offset 12  u64  payload size in bytes
//
// followed by the payload: interleaved (re, im) IEEE-754 doubles, little-endian.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adfft/grid.hpp"
#include "adfft/transport.hpp"

namespace adfft::wire {

/// Upper bound on a single payload; anything larger is treated as a corrupt header.
inline constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 36;

std::array<std::uint8_t, kHeaderBytes> encode_header(const MessageHeader& header) noexcept;
MessageHeader decode_header(std::span<const std::uint8_t, kHeaderBytes> bytes) noexcept;

/// Throws FramingError unless the header is addressed from `expected_src`
/// to `expected_dst` and its payload size is a whole number of complex
/// samples no larger than kMaxPayloadBytes.
void validate_header(const MessageHeader& header, int expected_src, int expected_dst);

void encode_payload(std::span<const Complex> samples, std::span<std::uint8_t> out) noexcept;
void decode_payload(std::span<const std::uint8_t> bytes, std::span<Complex> out) noexcept;

}  // namespace adfft::wire
