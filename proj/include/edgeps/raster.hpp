#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgeps/error.hpp"

namespace edgeps {

/// Row-major single-channel image. Value type, immutable in spirit: the
/// algorithms in this library take rasters by const reference and return new ones.
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
        check_dims(width, height);
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Raster(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        check_dims(width, height);
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw Error(ErrorKind::ShapeError, "raster data length does not match width*height");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    bool same_shape(const auto& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static void check_dims(int width, int height) {
        if (width < 0 || height < 0) {
            throw Error(ErrorKind::ShapeError, "negative raster dimensions");
        }
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Pixels are 0 or 1.
using BinaryMask = Raster<std::uint8_t>;
/// Probabilities in [0,1].
using SoftMask = Raster<double>;
/// Non-negative Euclidean pixel distances.
using DistanceMap = Raster<double>;

inline constexpr int kDefaultIgnoreIndex = 255;

/// Integer class-id raster. Every stored id is in [0, classes) or equals ignore_index.
class LabelMap {
public:
    LabelMap() = default;

    LabelMap(Raster<int> ids, int classes, int ignore_index = kDefaultIgnoreIndex)
        : ids_(std::move(ids)), classes_(classes), ignore_index_(ignore_index) {
        if (classes_ < 1) throw Error(ErrorKind::InvalidInput, "label map needs at least one class");
        if (ignore_index_ >= 0 && ignore_index_ < classes_) {
            throw Error(ErrorKind::InvalidInput, "ignore_index collides with a class id");
        }
        for (int id : ids_.pixels()) {
            if (id != ignore_index_ && (id < 0 || id >= classes_)) {
                throw Error(ErrorKind::InvalidInput,
                            "label id " + std::to_string(id) + " outside [0," +
                                std::to_string(classes_) + ") and not ignore_index");
            }
        }
    }

    LabelMap(int width, int height, int classes, int ignore_index = kDefaultIgnoreIndex)
        : LabelMap(Raster<int>(width, height, ignore_index), classes, ignore_index) {}

    int width() const noexcept { return ids_.width(); }
    int height() const noexcept { return ids_.height(); }
    std::size_t size() const noexcept { return ids_.size(); }
    int classes() const noexcept { return classes_; }
    int ignore_index() const noexcept { return ignore_index_; }
    const Raster<int>& ids() const noexcept { return ids_; }

    int operator()(int x, int y) const noexcept { return ids_(x, y); }
    int operator[](std::size_t i) const noexcept { return ids_[i]; }
    bool ignored(std::size_t i) const noexcept { return ids_[i] == ignore_index_; }

    /// Checked write; keeps the id invariant.
    void set(int x, int y, int id) {
        if (id != ignore_index_ && (id < 0 || id >= classes_)) {
            throw Error(ErrorKind::InvalidInput, "label id out of range");
        }
        ids_(x, y) = id;
    }

    BinaryMask class_mask(int c) const {
        BinaryMask out(width(), height());
        for (std::size_t i = 0; i < size(); ++i) out[i] = ids_[i] == c ? 1 : 0;
        return out;
    }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
    Raster<int> ids_;
    int classes_ = 1;
    int ignore_index_ = kDefaultIgnoreIndex;
};

/// Channel-major stack of equally sized planes (feature maps, per-class probabilities).
template <typename T>
class Planes {
public:
    Planes() = default;
    Planes(int channels, int width, int height, T fill = T{})
        : channels_(channels), width_(width), height_(height),
          data_(static_cast<std::size_t>(channels) * width * height, fill) {
        if (channels < 0 || width < 0 || height < 0) {
            throw Error(ErrorKind::ShapeError, "negative plane dimensions");
        }
    }

    int channels() const noexcept { return channels_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    std::size_t size() const noexcept { return data_.size(); }

    T& operator()(int c, std::size_t i) noexcept { return data_[c * plane_size() + i]; }
    const T& operator()(int c, std::size_t i) const noexcept { return data_[c * plane_size() + i]; }
    T& operator()(int c, int x, int y) noexcept {
        return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
    }
    const T& operator()(int c, int x, int y) const noexcept {
        return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
    }

    std::span<T> plane(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const T> plane(int c) const noexcept {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    Raster<T> plane_raster(int c) const {
        auto p = plane(c);
        return Raster<T>(width_, height_, std::vector<T>(p.begin(), p.end()));
    }

    std::span<T> flat() noexcept { return data_; }
    std::span<const T> flat() const noexcept { return data_; }

    friend bool operator==(const Planes&, const Planes&) = default;

private:
    int channels_ = 0;
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

inline bool is_valid_binary(const BinaryMask& m) {
    for (auto v : m.pixels()) {
        if (v > 1) return false;
    }
    return true;
}

inline bool is_valid_soft(const SoftMask& m) {
    for (double v : m.pixels()) {
        if (!(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
}

inline std::size_t count_set(const BinaryMask& m) {
    std::size_t n = 0;
    for (auto v : m.pixels()) n += v != 0;
    return n;
}

}  // namespace edgeps
