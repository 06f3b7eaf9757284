#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bmi/core_types.hpp"

namespace bmi {

// Byte layouts are frozen in docs/FORMATS.md. All multi-byte fields are
// little-endian except PGM samples, which are big-endian per netpbm.

inline constexpr std::uint16_t kMeasurementVersion = 1;
inline constexpr std::uint16_t kMaskVersion = 1;
inline constexpr std::size_t kMeasurementHeaderSize = 40;
inline constexpr std::size_t kMaskHeaderSize = 28;

inline constexpr std::uint16_t kFlagMaskEmbedded = 1u << 0;
inline constexpr std::uint16_t kFlagPadded = 1u << 1;

// ---- images ---------------------------------------------------------------

enum class ImageFormat { Pgm, RawF32 };

/// `.pgm`/`.ppm` select netpbm, anything else is raw float32 with a
/// `<path>.dims` sidecar holding "height width".
ImageFormat format_for(const std::filesystem::path& path);
std::filesystem::path raw_sidecar(const std::filesystem::path& path);

struct ImageWriteOptions {
    int bit_depth = 8;  ///< PGM only: 8 or 16
};

/// Single-channel read. Values are normalized by maxval (PGM) and checked
/// to lie in [0,1].
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path, ImageWriteOptions options = {});

/// P5 gives one channel, P6 three; raw float gives one.
std::vector<Image> read_channels(const std::filesystem::path& path);
/// One channel writes like write_image; three channels write P6.
void write_channels(std::span<const Image> channels, const std::filesystem::path& path,
                    ImageWriteOptions options = {});

std::vector<Image> parse_netpbm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> format_netpbm(std::span<const Image> channels, int bit_depth);

// ---- measurements ---------------------------------------------------------

std::vector<std::uint8_t> serialize_measurement(const Measurement& m);
/// Validates magic, version, sizes and every Measurement invariant. With an
/// embedded mask each value is also checked against its recomputed coverage.
Measurement parse_measurement(std::span<const std::uint8_t> bytes);

void write_measurement(const Measurement& m, const std::filesystem::path& path);
Measurement read_measurement(const std::filesystem::path& path);

// ---- masks ----------------------------------------------------------------

std::vector<std::uint8_t> serialize_mask(const Mask& mask);
Mask parse_mask(std::span<const std::uint8_t> bytes);

void write_mask(const Mask& mask, const std::filesystem::path& path);
Mask read_mask(const std::filesystem::path& path);

// ---- shared helpers -------------------------------------------------------

/// Row-major, MSB first, each row padded to a whole byte.
std::vector<std::uint8_t> pack_bits(const Grid2<std::uint8_t>& bits);
std::size_t packed_size(std::size_t height, std::size_t width);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace bmi
