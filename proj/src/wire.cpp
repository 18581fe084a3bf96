#include "adfft/wire.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "adfft/error.hpp"

namespace adfft::wire {

namespace {

template <class T>
void put_le(std::uint8_t* out, T value) noexcept {
  for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = static_cast<std::uint8_t>(value >> (8 * i));
}

template <class T>
T get_le(const std::uint8_t* in) noexcept {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[i]) << (8 * i);
  return value;
}

}  // namespace

std::array<std::uint8_t, kHeaderBytes> encode_header(const MessageHeader& header) noexcept {
  std::array<std::uint8_t, kHeaderBytes> out{};
  put_le(out.data(), header.phase);
  put_le(out.data() + 4, header.src);
  put_le(out.data() + 8, header.dst);
  put_le(out.data() + 12, header.payload_bytes);
  return out;
}

MessageHeader decode_header(std::span<const std::uint8_t, kHeaderBytes> bytes) noexcept {
  MessageHeader h;
  h.phase = get_le<std::uint32_t>(bytes.data());
  h.src = get_le<std::uint32_t>(bytes.data() + 4);
  h.dst = get_le<std::uint32_t>(bytes.data() + 8);
  h.payload_bytes = get_le<std::uint64_t>(bytes.data() + 12);
  return h;
}

void validate_header(const MessageHeader& header, int expected_src, int expected_dst) {
  if (header.src != static_cast<std::uint32_t>(expected_src) ||
      header.dst != static_cast<std::uint32_t>(expected_dst)) {
    throw FramingError("frame addressed " + std::to_string(header.src) + "->" + std::to_string(header.dst) +
                           " arrived on the " + std::to_string(expected_src) + "->" +
                           std::to_string(expected_dst) + " connection",
                       expected_src);
  }
  if (header.payload_bytes % kBytesPerPoint != 0 || header.payload_bytes > kMaxPayloadBytes) {
    throw FramingError("frame payload of " + std::to_string(header.payload_bytes) +
                           " bytes is not a valid run of complex samples",
                       expected_src);
  }
}

void encode_payload(std::span<const Complex> samples, std::span<std::uint8_t> out) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), samples.data(), samples.size() * kBytesPerPoint);
  } else {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      put_le(out.data() + i * kBytesPerPoint, std::bit_cast<std::uint64_t>(samples[i].real()));
      put_le(out.data() + i * kBytesPerPoint + 8, std::bit_cast<std::uint64_t>(samples[i].imag()));
    }
  }
}

void decode_payload(std::span<const std::uint8_t> bytes, std::span<Complex> out) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), bytes.data(), out.size() * kBytesPerPoint);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = {std::bit_cast<double>(get_le<std::uint64_t>(bytes.data() + i * kBytesPerPoint)),
                std::bit_cast<double>(get_le<std::uint64_t>(bytes.data() + i * kBytesPerPoint + 8))};
    }
  }
}

}  // namespace adfft::wire
