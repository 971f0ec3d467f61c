#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "edgeps/raster.hpp"

namespace edgeps {

/// Raw grey samples of a PGM file, before interpretation as labels or probabilities.
struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint16_t> samples;

    friend bool operator==(const PgmImage&, const PgmImage&) = default;
};

enum class PgmEncoding { Ascii /* P2 */, Binary /* P5 */ };

/// Soft masks are persisted on this 16-bit grid: sample = round(value * kSoftScale).
inline constexpr int kSoftScale = 65535;

namespace detail {

class PgmCursor {
public:
    explicit PgmCursor(const std::string& bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = static_cast<unsigned char>(bytes_[pos_]);
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000L) throw Error(ErrorKind::FormatError, std::string(what) + " too large");
            ++pos_;
        }
        if (pos_ == start) throw Error(ErrorKind::FormatError, std::string("expected ") + what);
        return value;
    }

    std::size_t pos() const noexcept { return pos_; }
    void advance(std::size_t n) noexcept { pos_ += n; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    unsigned char byte_at(std::size_t i) const { return static_cast<unsigned char>(bytes_[i]); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline PgmImage parse_pgm(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
        throw Error(ErrorKind::FormatError, "missing P2/P5 magic");
    }
    const bool binary = bytes[1] == '5';
    detail::PgmCursor cur(bytes);
    cur.advance(2);

    PgmImage img;
    const long w = cur.read_uint("width");
    const long h = cur.read_uint("height");
    const long maxval = cur.read_uint("maxval");
    if (w <= 0 || h <= 0) throw Error(ErrorKind::FormatError, "non-positive dimensions");
    if (maxval == 0 || maxval > 65535) throw Error(ErrorKind::FormatError, "maxval must be in [1,65535]");
    if (w * h > (1L << 28)) throw Error(ErrorKind::FormatError, "image too large");
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.maxval = static_cast<int>(maxval);
    const auto count = static_cast<std::size_t>(w * h);
    img.samples.resize(count);

    if (binary) {
        // Exactly one whitespace byte separates the header from the raster.
        if (cur.remaining() == 0 || !std::isspace(cur.byte_at(cur.pos()))) {
            throw Error(ErrorKind::FormatError, "missing whitespace after maxval");
        }
        cur.advance(1);
        const std::size_t bps = maxval < 256 ? 1 : 2;
        if (cur.remaining() < count * bps) throw Error(ErrorKind::FormatError, "truncated P5 payload");
        const std::size_t base = cur.pos();
        for (std::size_t i = 0; i < count; ++i) {
            std::uint16_t v = bps == 1 ? cur.byte_at(base + i)
                                       : static_cast<std::uint16_t>((cur.byte_at(base + 2 * i) << 8) |
                                                                    cur.byte_at(base + 2 * i + 1));
            img.samples[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            long v = 0;
            try {
                v = cur.read_uint("sample");
            } catch (const Error&) {
                throw Error(ErrorKind::FormatError, "truncated P2 payload");
            }
            if (v > 65535) throw Error(ErrorKind::FormatError, "sample exceeds 16 bits");
            img.samples[i] = static_cast<std::uint16_t>(v);
        }
    }
    for (auto v : img.samples) {
        if (v > img.maxval) throw Error(ErrorKind::FormatError, "sample exceeds maxval");
    }
    return img;
}

inline PgmImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::FormatError, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pgm(bytes);
}

inline std::string encode_pgm(const PgmImage& img, PgmEncoding encoding = PgmEncoding::Binary) {
    if (img.maxval < 1 || img.maxval > 65535) throw Error(ErrorKind::FormatError, "maxval must be in [1,65535]");
    if (img.samples.size() != static_cast<std::size_t>(img.width) * img.height) {
        throw Error(ErrorKind::ShapeError, "sample count does not match dimensions");
    }
    std::ostringstream out;
    out << (encoding == PgmEncoding::Binary ? "P5" : "P2") << '\n'
        << img.width << ' ' << img.height << '\n'
        << img.maxval << '\n';
    if (encoding == PgmEncoding::Binary) {
        const bool wide = img.maxval >= 256;
        for (auto v : img.samples) {
            if (wide) out.put(static_cast<char>(v >> 8));
            out.put(static_cast<char>(v & 0xff));
        }
    } else {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                if (x) out << ' ';
                out << img.samples[static_cast<std::size_t>(y) * img.width + x];
            }
            out << '\n';
        }
    }
    return out.str();
}

inline void write_pgm(const PgmImage& img, const std::filesystem::path& path,
                      PgmEncoding encoding = PgmEncoding::Binary) {
    const std::string bytes = encode_pgm(img, encoding);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::FormatError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---- interpretation ------------------------------------------------------------

/// Label ids are stored verbatim. When `classes` is 0 it is inferred as
/// (largest non-ignore id + 1).
inline LabelMap to_label_map(const PgmImage& img, int classes = 0, int ignore_index = kDefaultIgnoreIndex) {
    std::vector<int> ids(img.samples.begin(), img.samples.end());
    if (classes == 0) {
        int top = -1;
        for (int id : ids) {
            if (id != ignore_index) top = std::max(top, id);
        }
        classes = std::max(1, top + 1);
    }
    return LabelMap(Raster<int>(img.width, img.height, std::move(ids)), classes, ignore_index);
}

inline PgmImage from_label_map(const LabelMap& labels) {
    PgmImage img{labels.width(), labels.height(), 255, {}};
    int top = labels.ignore_index();
    for (int id : labels.ids().pixels()) top = std::max(top, id);
    if (top > 65535 || labels.ignore_index() < 0) {
        throw Error(ErrorKind::FormatError, "label ids do not fit in 16 bits");
    }
    if (top > 255) img.maxval = 65535;
    img.samples.assign(labels.ids().pixels().begin(), labels.ids().pixels().end());
    return img;
}

/// Probabilities are sample / maxval.
inline SoftMask to_soft_mask(const PgmImage& img) {
    SoftMask out(img.width, img.height);
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
        out[i] = static_cast<double>(img.samples[i]) / img.maxval;
    }
    return out;
}

inline std::uint16_t quantize_probability(double v) {
    return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * kSoftScale));
}

/// Snaps a probability onto the 16-bit persistence grid.
inline double quantized(double v) {
    return static_cast<double>(quantize_probability(v)) / kSoftScale;
}

inline PgmImage from_soft_mask(const SoftMask& mask) {
    PgmImage img{mask.width(), mask.height(), kSoftScale, {}};
    img.samples.reserve(mask.size());
    for (double v : mask.pixels()) img.samples.push_back(quantize_probability(v));
    return img;
}

inline LabelMap load_label_map(const std::filesystem::path& path, int classes = 0,
                               int ignore_index = kDefaultIgnoreIndex) {
    return to_label_map(read_pgm(path), classes, ignore_index);
}

inline SoftMask load_soft_mask(const std::filesystem::path& path) {
    return to_soft_mask(read_pgm(path));
}

inline void save_pgm(const LabelMap& labels, const std::filesystem::path& path,
                     PgmEncoding encoding = PgmEncoding::Binary) {
    write_pgm(from_label_map(labels), path, encoding);
}

inline void save_pgm(const SoftMask& mask, const std::filesystem::path& path,
                     PgmEncoding encoding = PgmEncoding::Binary) {
    write_pgm(from_soft_mask(mask), path, encoding);
}

}  // namespace edgeps
