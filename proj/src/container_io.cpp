#include "bmi/container_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

#include "bmi/mask_gen.hpp"

namespace bmi {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Little-endian cursor helpers

namespace {

class Writer {
public:
    void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void append(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return b_.size() - pos_; }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (remaining() < n)
            throw Error(ErrorCode::Malformed, std::string("truncated while reading ") + what, b_.size());
        auto s = b_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(le(2, what)); }
    std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
    std::uint64_t u64(const char* what) { return le(8, what); }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

private:
    std::uint64_t le(std::size_t n, const char* what) {
        auto s = take(n, what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t{s[i]} << (8 * i);
        return v;
    }
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

void check_magic(Reader& r, std::string_view magic) {
    auto got = r.take(4, "magic");
    if (!std::equal(got.begin(), got.end(), magic.begin()))
        throw Error(ErrorCode::BadMagic, "expected magic \"" + std::string(magic) + "\"", 0);
}

Grid2<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed, std::size_t h, std::size_t w) {
    Grid2<std::uint8_t> bits(h, w);
    const std::size_t stride = (w + 7) / 8;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            bits.at(r, c) = (packed[r * stride + c / 8] >> (7 - c % 8)) & 1u;
    return bits;
}

void require_exact_size(std::size_t actual, std::uint64_t expected, const char* what) {
    if (actual < expected)
        throw Error(ErrorCode::Malformed, std::string(what) + " truncated: expected " +
                                              std::to_string(expected) + " bytes",
                    actual);
    if (actual > expected)
        throw Error(ErrorCode::Malformed, std::string(what) + " has trailing bytes", expected);
}

}  // namespace

std::size_t packed_size(std::size_t height, std::size_t width) { return height * ((width + 7) / 8); }

std::vector<std::uint8_t> pack_bits(const Grid2<std::uint8_t>& bits) {
    const std::size_t stride = (bits.width + 7) / 8;
    std::vector<std::uint8_t> out(bits.height * stride, 0);
    for (std::size_t r = 0; r < bits.height; ++r)
        for (std::size_t c = 0; c < bits.width; ++c)
            if (bits.at(r, c)) out[r * stride + c / 8] |= static_cast<std::uint8_t>(0x80u >> (c % 8));
    return out;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
    return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Images

ImageFormat format_for(const fs::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") ? ImageFormat::Pgm : ImageFormat::RawF32;
}

fs::path raw_sidecar(const fs::path& path) { return fs::path(path.string() + ".dims"); }

namespace {

// Netpbm header token: skips whitespace and '#' comments.
std::uint64_t header_number(std::span<const std::uint8_t> b, std::size_t& pos, const char* what) {
    for (;;) {
        if (pos >= b.size()) throw Error(ErrorCode::Malformed, std::string("header ends before ") + what, pos);
        if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else if (std::isspace(b[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    if (!std::isdigit(b[pos])) throw Error(ErrorCode::Malformed, std::string("expected digits for ") + what, pos);
    std::uint64_t v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        v = v * 10 + (b[pos] - '0');
        if (v > std::numeric_limits<std::uint32_t>::max())
            throw Error(ErrorCode::Malformed, std::string(what) + " too large", pos);
        ++pos;
    }
    return v;
}

}  // namespace

std::vector<Image> parse_netpbm(std::span<const std::uint8_t> b) {
    if (b.size() < 2 || b[0] != 'P' || (b[1] != '5' && b[1] != '6'))
        throw Error(ErrorCode::Malformed, "not a binary PGM/PPM (P5/P6)", 0);
    const std::size_t channels = b[1] == '5' ? 1 : 3;
    std::size_t pos = 2;
    const auto width = header_number(b, pos, "width");
    const auto height = header_number(b, pos, "height");
    const auto maxval = header_number(b, pos, "maxval");
    if (pos >= b.size() || !std::isspace(b[pos]))
        throw Error(ErrorCode::Malformed, "missing whitespace after maxval", pos);
    ++pos;
    if (width == 0 || height == 0) throw Error(ErrorCode::Malformed, "zero image dimension", pos);
    if (maxval == 0 || maxval > 65535)
        throw Error(ErrorCode::UnsupportedDepth, "maxval " + std::to_string(maxval) + " unsupported");

    const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
    const std::uint64_t need = width * height * channels * sample_bytes;
    if (b.size() - pos < need)
        throw Error(ErrorCode::Malformed, "pixel data truncated: need " + std::to_string(need) + " bytes",
                    b.size());

    std::vector<Image> out(channels, Image(height, width));
    const float scale = 1.0f / static_cast<float>(maxval);
    for (std::size_t i = 0; i < width * height; ++i) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
            const std::size_t at = pos + (i * channels + ch) * sample_bytes;
            std::uint32_t v = sample_bytes == 1 ? b[at] : (std::uint32_t{b[at]} << 8) | b[at + 1];
            if (v > maxval) throw Error(ErrorCode::Malformed, "sample exceeds maxval", at);
            out[ch].data[i] = static_cast<float>(v) * scale;
        }
    }
    return out;
}

std::vector<std::uint8_t> format_netpbm(std::span<const Image> channels, int bit_depth) {
    if (channels.size() != 1 && channels.size() != 3)
        throw Error(ErrorCode::InvalidArgument, "netpbm output needs 1 or 3 channels");
    if (bit_depth != 8 && bit_depth != 16)
        throw Error(ErrorCode::UnsupportedDepth, "bit depth must be 8 or 16");
    const auto& first = channels.front();
    for (const auto& ch : channels)
        if (!ch.same_shape(first)) throw Error(ErrorCode::DimensionMismatch, "channel sizes differ");

    const unsigned maxval = bit_depth == 8 ? 255u : 65535u;
    std::ostringstream header;
    header << (channels.size() == 1 ? "P5" : "P6") << '\n'
           << first.width << ' ' << first.height << '\n'
           << maxval << '\n';
    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    out.reserve(out.size() + first.size() * channels.size() * (bit_depth / 8));
    for (std::size_t i = 0; i < first.size(); ++i) {
        for (const auto& ch : channels) {
            const float v = std::clamp(ch.data[i], 0.0f, 1.0f);
            const auto q = static_cast<std::uint32_t>(std::lround(v * static_cast<float>(maxval)));
            if (bit_depth == 16) out.push_back(static_cast<std::uint8_t>(q >> 8));
            out.push_back(static_cast<std::uint8_t>(q & 0xffu));
        }
    }
    return out;
}

namespace {

Image read_raw(const fs::path& path) {
    const auto side = raw_sidecar(path);
    std::ifstream dims(side);
    if (!dims) throw Error(ErrorCode::Io, "missing dimension sidecar " + side.string());
    long long h = -1, w = -1;
    if (!(dims >> h >> w) || h <= 0 || w <= 0)
        throw Error(ErrorCode::Malformed, "sidecar " + side.string() + " must hold positive 'height width'", 0);

    const auto bytes = read_file(path);
    const std::uint64_t need = static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w) * 4;
    require_exact_size(bytes.size(), need, "raw float image");
    Reader r(bytes);
    Image image(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
    for (auto& v : image.data) v = r.f32("pixel");
    return image;
}

void write_raw(const Image& image, const fs::path& path) {
    Writer w;
    for (float v : image.data) w.f32(v);
    write_file(path, w.take());
    std::ofstream dims(raw_sidecar(path), std::ios::trunc);
    if (!dims) throw Error(ErrorCode::Io, "cannot write sidecar for " + path.string());
    dims << image.height << ' ' << image.width << '\n';
}

}  // namespace

std::vector<Image> read_channels(const fs::path& path) {
    std::vector<Image> channels;
    if (format_for(path) == ImageFormat::Pgm)
        channels = parse_netpbm(read_file(path));
    else
        channels.push_back(read_raw(path));
    for (const auto& ch : channels) ch.check_normalized();
    return channels;
}

Image read_image(const fs::path& path) {
    auto channels = read_channels(path);
    if (channels.size() != 1)
        throw Error(ErrorCode::UnsupportedDepth, path.string() + " has " + std::to_string(channels.size()) +
                                                     " channels; expected 1");
    return std::move(channels.front());
}

void write_image(const Image& image, const fs::path& path, ImageWriteOptions options) {
    write_channels(std::span<const Image>(&image, 1), path, options);
}

void write_channels(std::span<const Image> channels, const fs::path& path, ImageWriteOptions options) {
    if (format_for(path) == ImageFormat::Pgm) {
        write_file(path, format_netpbm(channels, options.bit_depth));
        return;
    }
    if (channels.size() != 1)
        throw Error(ErrorCode::InvalidArgument, "raw float files hold a single channel");
    write_raw(channels.front(), path);
}

// ---------------------------------------------------------------------------
// Measurements

std::vector<std::uint8_t> serialize_measurement(const Measurement& m) {
    m.validate();
    const auto* seeded = std::get_if<SeededMask>(&m.mask_provenance);
    const Mask* embedded = std::get_if<Mask>(&m.mask_provenance);
    if (m.grid.rows > 0xffffu || m.grid.cols > 0xffffu)
        throw Error(ErrorCode::InvariantViolation, "grid: rows/cols exceed 16 bits");

    std::uint16_t flags = 0;
    if (embedded) flags |= kFlagMaskEmbedded;
    if (m.padded()) flags |= kFlagPadded;

    Writer w;
    w.bytes("BMIM");
    w.u16(kMeasurementVersion);
    w.u16(flags);
    w.u32(static_cast<std::uint32_t>(m.original_height));
    w.u32(static_cast<std::uint32_t>(m.original_width));
    w.u16(static_cast<std::uint16_t>(m.grid.rows));
    w.u16(static_cast<std::uint16_t>(m.grid.cols));
    w.u32(static_cast<std::uint32_t>(m.block_height()));
    w.u32(static_cast<std::uint32_t>(m.block_width()));
    w.u64(seeded ? seeded->seed : embedded->origin.seed);
    w.f32(seeded ? seeded->density : embedded->origin.density);
    for (float v : m.data.data) w.f32(v);
    if (embedded) w.append(pack_bits(*embedded));
    return w.take();
}

Measurement parse_measurement(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    check_magic(r, "BMIM");
    const auto version = r.u16("version");
    if (version != kMeasurementVersion)
        throw Error(ErrorCode::UnsupportedVersion, "measurement version " + std::to_string(version), 4);
    const auto flags = r.u16("flags");
    if (flags & ~(kFlagMaskEmbedded | kFlagPadded))
        throw Error(ErrorCode::InvariantViolation, "flags: unknown bits set");
    const std::uint32_t oh = r.u32("original_h");
    const std::uint32_t ow = r.u32("original_w");
    const std::uint16_t rows = r.u16("grid_rows");
    const std::uint16_t cols = r.u16("grid_cols");
    const std::uint32_t bh = r.u32("block_h");
    const std::uint32_t bw = r.u32("block_w");
    const std::uint64_t seed = r.u64("mask_seed");
    const float density = r.f32("mask_density");

    if (rows == 0 || cols == 0) throw Error(ErrorCode::InvariantViolation, "grid: rows and cols must be >= 1");
    if (oh == 0 || ow == 0 || bh == 0 || bw == 0)
        throw Error(ErrorCode::InvariantViolation, "dimensions: zero-sized image or block");

    const bool embedded = flags & kFlagMaskEmbedded;
    const std::uint64_t payload = std::uint64_t{bh} * bw * 4;
    const std::uint64_t mask_bytes = embedded ? std::uint64_t{oh} * ((std::uint64_t{ow} + 7) / 8) : 0;
    require_exact_size(bytes.size(), kMeasurementHeaderSize + payload + mask_bytes, "measurement");

    Measurement m;
    m.grid = BlockGrid(rows, cols);
    m.original_height = oh;
    m.original_width = ow;
    std::vector<float> values(std::size_t{bh} * bw);
    for (auto& v : values) v = r.f32("payload");
    m.data = Grid2<float>(bh, bw, std::move(values));

    if (embedded) {
        auto bits = unpack_bits(r.take(mask_bytes, "mask bits"), oh, ow);
        Mask mask(oh, ow, std::move(bits.data), MaskOrigin{0, seed, density});
        m.mask_provenance = std::move(mask);
    } else {
        m.mask_provenance = SeededMask{seed, density};
    }

    if (static_cast<bool>(flags & kFlagPadded) != m.padded())
        throw Error(ErrorCode::InvariantViolation, "flags: padded bit disagrees with dimensions");
    m.validate();

    if (const Mask* mask = std::get_if<Mask>(&m.mask_provenance)) {
        // Recompute coverage on the (zero-padded) mask; a valid encoding of a
        // normalized image never exceeds it.
        Grid2<std::uint32_t> cov(bh, bw);
        for (std::size_t rr = 0; rr < oh; ++rr)
            for (std::size_t c = 0; c < ow; ++c) cov.at(rr % bh, c % bw) += mask->at(rr, c);
        for (std::size_t j = 0; j < cov.size(); ++j)
            if (m.data.data[j] > static_cast<float>(cov.data[j]))
                throw Error(ErrorCode::InvariantViolation,
                            "payload: value at index " + std::to_string(j) + " exceeds mask coverage " +
                                std::to_string(cov.data[j]));
    }
    return m;
}

void write_measurement(const Measurement& m, const fs::path& path) { write_file(path, serialize_measurement(m)); }

Measurement read_measurement(const fs::path& path) { return parse_measurement(read_file(path)); }

// ---------------------------------------------------------------------------
// Masks

std::vector<std::uint8_t> serialize_mask(const Mask& mask) {
    if (mask.height == 0 || mask.width == 0) throw Error(ErrorCode::ZeroArea, "empty mask");
    Writer w;
    w.bytes("BMIK");
    w.u16(kMaskVersion);
    w.u32(static_cast<std::uint32_t>(mask.height));
    w.u32(static_cast<std::uint32_t>(mask.width));
    w.u16(mask.origin.prng_id);
    w.u64(mask.origin.seed);
    w.f32(mask.origin.density);
    w.append(pack_bits(mask));
    return w.take();
}

Mask parse_mask(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    check_magic(r, "BMIK");
    const auto version = r.u16("version");
    if (version != kMaskVersion)
        throw Error(ErrorCode::UnsupportedVersion, "mask version " + std::to_string(version), 4);
    const std::uint32_t h = r.u32("height");
    const std::uint32_t w = r.u32("width");
    MaskOrigin origin;
    origin.prng_id = r.u16("prng_id");
    origin.seed = r.u64("seed");
    origin.density = r.f32("density");

    if (h == 0 || w == 0) throw Error(ErrorCode::InvariantViolation, "dimensions: zero-sized mask");
    if (origin.prng_id != 0 && origin.prng_id != kPrngXoshiro256ss)
        throw Error(ErrorCode::InvariantViolation, "prng_id: unknown generator " + std::to_string(origin.prng_id));
    if (origin.prng_id != 0 && !(origin.density > 0.0f && origin.density < 1.0f))
        throw Error(ErrorCode::InvariantViolation, "density: outside (0,1) for a generated mask");

    const std::uint64_t need = std::uint64_t{h} * ((std::uint64_t{w} + 7) / 8);
    require_exact_size(bytes.size(), kMaskHeaderSize + need, "mask");
    auto bits = unpack_bits(r.take(need, "mask bits"), h, w);
    return Mask(h, w, std::move(bits.data), origin);
}

void write_mask(const Mask& mask, const fs::path& path) { write_file(path, serialize_mask(mask)); }

Mask read_mask(const fs::path& path) { return parse_mask(read_file(path)); }

}  // namespace bmi
