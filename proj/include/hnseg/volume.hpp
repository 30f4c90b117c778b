#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hnseg/errors.hpp"

namespace hnseg {

// Axis-aligned voxel-index box, inclusive on both ends.
struct BoundingBox {
    std::array<std::ptrdiff_t, 3> min{0, 0, 0};  // (x, y, z)
    std::array<std::ptrdiff_t, 3> max{0, 0, 0};

    std::size_t extent(int axis) const {
        return static_cast<std::size_t>(max[axis] - min[axis] + 1);
    }
    std::size_t num_voxels() const { return extent(0) * extent(1) * extent(2); }

    bool contains(std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) const {
        return x >= min[0] && x <= max[0] && y >= min[1] && y <= max[1] &&
               z >= min[2] && z <= max[2];
    }
};

// 3D scalar grid with physical voxel spacing. Voxels are stored x-fastest:
// index = (z * ny + y) * nx + x.
struct Volume {
    std::array<std::size_t, 3> dims{0, 0, 0};     // (nx, ny, nz)
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // millimeters per voxel
    std::vector<double> voxels;

    Volume() = default;

    Volume(std::size_t nx, std::size_t ny, std::size_t nz, double fill = 0.0)
        : dims{nx, ny, nz}, voxels(nx * ny * nz, fill) {}

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return (z * dims[1] + y) * dims[0] + x;
    }
    double& at(std::size_t x, std::size_t y, std::size_t z) {
        return voxels[index(x, y, z)];
    }
    double at(std::size_t x, std::size_t y, std::size_t z) const {
        return voxels[index(x, y, z)];
    }
    std::size_t size() const { return voxels.size(); }

    bool in_bounds(const BoundingBox& box) const {
        for (int a = 0; a < 3; ++a) {
            if (box.min[a] < 0 || box.max[a] < box.min[a] ||
                box.max[a] >= static_cast<std::ptrdiff_t>(dims[a]))
                return false;
        }
        return true;
    }
};

// Binary companion of Volume, same layout.
struct MaskVolume {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::vector<std::uint8_t> voxels;

    MaskVolume() = default;

    MaskVolume(std::size_t nx, std::size_t ny, std::size_t nz, std::uint8_t fill = 0)
        : dims{nx, ny, nz}, voxels(nx * ny * nz, fill) {}

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return (z * dims[1] + y) * dims[0] + x;
    }
    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t z) {
        return voxels[index(x, y, z)];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t z) const {
        return voxels[index(x, y, z)];
    }
    std::size_t size() const { return voxels.size(); }

    std::size_t foreground_count() const {
        std::size_t n = 0;
        for (auto v : voxels) n += (v != 0);
        return n;
    }

    bool dims_match(const MaskVolume& o) const { return dims == o.dims; }
};

// Tight bounding box of the mask foreground. Errors on an empty mask.
inline BoundingBox tight_box(const MaskVolume& m) {
    BoundingBox box;
    bool any = false;
    for (std::size_t z = 0; z < m.dims[2]; ++z)
        for (std::size_t y = 0; y < m.dims[1]; ++y)
            for (std::size_t x = 0; x < m.dims[0]; ++x) {
                if (!m.at(x, y, z)) continue;
                const std::ptrdiff_t p[3] = {static_cast<std::ptrdiff_t>(x),
                                             static_cast<std::ptrdiff_t>(y),
                                             static_cast<std::ptrdiff_t>(z)};
                if (!any) {
                    for (int a = 0; a < 3; ++a) box.min[a] = box.max[a] = p[a];
                    any = true;
                } else {
                    for (int a = 0; a < 3; ++a) {
                        if (p[a] < box.min[a]) box.min[a] = p[a];
                        if (p[a] > box.max[a]) box.max[a] = p[a];
                    }
                }
            }
    require(any, "tight_box: empty mask");
    return box;
}

// ---------------------------------------------------------------------------
// Volume files: <base>.meta (key-value text) + <base>.raw (little-endian
// binary, x-fastest). Images are float32, masks uint8. Load/save round-trips
// bit-exactly.

namespace detail {

inline void write_meta(const std::filesystem::path& path,
                       const std::array<std::size_t, 3>& dims,
                       const std::array<double, 3>& spacing, const char* dtype) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "dims " << dims[0] << " " << dims[1] << " " << dims[2] << "\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "spacing %.17g %.17g %.17g\n", spacing[0],
                  spacing[1], spacing[2]);
    out << buf;
    out << "dtype " << dtype << "\n";
}

struct MetaInfo {
    std::array<std::size_t, 3> dims{};
    std::array<double, 3> spacing{};
    std::string dtype;
};

inline MetaInfo read_meta(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read " + path.string());
    MetaInfo info;
    bool saw_dims = false, saw_spacing = false, saw_dtype = false;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key.empty() || key[0] == '#') continue;
        if (key == "dims") {
            if (!(ls >> info.dims[0] >> info.dims[1] >> info.dims[2]))
                throw io_error("malformed dims in " + path.string());
            saw_dims = true;
        } else if (key == "spacing") {
            if (!(ls >> info.spacing[0] >> info.spacing[1] >> info.spacing[2]))
                throw io_error("malformed spacing in " + path.string());
            saw_spacing = true;
        } else if (key == "dtype") {
            if (!(ls >> info.dtype)) throw io_error("malformed dtype in " + path.string());
            saw_dtype = true;
        }
    }
    if (!saw_dims || !saw_spacing || !saw_dtype)
        throw io_error("incomplete volume metadata in " + path.string());
    if (info.dims[0] == 0 || info.dims[1] == 0 || info.dims[2] == 0)
        throw io_error("degenerate dims in " + path.string());
    if (info.spacing[0] <= 0 || info.spacing[1] <= 0 || info.spacing[2] <= 0)
        throw io_error("non-positive spacing in " + path.string());
    return info;
}

template <typename T>
void write_raw(const std::filesystem::path& path, const std::vector<T>& data) {
    static_assert(sizeof(T) == 1 || sizeof(T) == 4);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(T)));
    if (!out) throw io_error("short write to " + path.string());
}

template <typename T>
std::vector<T> read_raw(const std::filesystem::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw io_error("cannot read " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != count * sizeof(T))
        throw io_error(path.string() + ": expected " +
                       std::to_string(count * sizeof(T)) + " bytes, found " +
                       std::to_string(bytes));
    std::vector<T> data(count);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(bytes));
    if (!in) throw io_error("short read from " + path.string());
    return data;
}

}  // namespace detail

inline void save_volume(const Volume& v, const std::filesystem::path& base) {
    detail::write_meta(base.string() + ".meta", v.dims, v.spacing, "float32");
    std::vector<float> raw(v.voxels.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<float>(v.voxels[i]);
    detail::write_raw(base.string() + ".raw", raw);
}

inline Volume load_volume(const std::filesystem::path& base) {
    const auto info = detail::read_meta(base.string() + ".meta");
    if (info.dtype != "float32")
        throw io_error(base.string() + ": expected dtype float32, found " + info.dtype);
    Volume v(info.dims[0], info.dims[1], info.dims[2]);
    v.spacing = info.spacing;
    const auto raw = detail::read_raw<float>(base.string() + ".raw", v.size());
    for (std::size_t i = 0; i < raw.size(); ++i) v.voxels[i] = raw[i];
    return v;
}

inline void save_mask(const MaskVolume& m, const std::filesystem::path& base) {
    detail::write_meta(base.string() + ".meta", m.dims, m.spacing, "uint8");
    detail::write_raw(base.string() + ".raw", m.voxels);
}

inline MaskVolume load_mask(const std::filesystem::path& base) {
    const auto info = detail::read_meta(base.string() + ".meta");
    if (info.dtype != "uint8")
        throw io_error(base.string() + ": expected dtype uint8, found " + info.dtype);
    MaskVolume m(info.dims[0], info.dims[1], info.dims[2]);
    m.spacing = info.spacing;
    m.voxels = detail::read_raw<std::uint8_t>(base.string() + ".raw", m.size());
    for (auto v : m.voxels)
        if (v > 1) throw io_error(base.string() + ": mask voxels must be 0 or 1");
    return m;
}

}  // namespace hnseg
