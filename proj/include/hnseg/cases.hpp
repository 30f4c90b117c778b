#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hnseg/volume.hpp"

namespace hnseg {

// One study: raw-intensity image plus binary ground-truth mask.
struct CaseData {
    std::string id;
    Volume image;
    MaskVolume mask;
};

// On disk a case is a directory:
//   <dir>/image.meta + image.raw   float32 volume
//   <dir>/mask.meta  + mask.raw    uint8 mask
//   <dir>/meta                     key-value text (id, optional extras)
inline void save_case(const CaseData& c, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());
    require(c.mask.dims == c.image.dims, "save_case: image/mask dimension mismatch");
    save_volume(c.image, dir / "image");
    save_mask(c.mask, dir / "mask");
    std::ofstream meta(dir / "meta");
    if (!meta) throw io_error("cannot open " + (dir / "meta").string() + " for writing");
    meta << "id " << c.id << "\n";
    if (!meta) throw io_error("write failed for " + (dir / "meta").string());
}

inline CaseData load_case(const std::filesystem::path& dir) {
    std::ifstream meta(dir / "meta");
    if (!meta) throw io_error("cannot open " + (dir / "meta").string());
    CaseData c;
    std::string line;
    while (std::getline(meta, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "id") ls >> c.id;
    }
    if (c.id.empty()) throw io_error((dir / "meta").string() + ": missing id");
    c.image = load_volume(dir / "image");
    c.mask = load_mask(dir / "mask");
    require(c.mask.dims == c.image.dims,
            "load_case: image/mask dimension mismatch in " + dir.string());
    require(c.mask.foreground_count() > 0,
            "load_case: empty ground-truth mask in " + dir.string());
    return c;
}

// Loads every case directory under root, ordered by id.
inline std::vector<CaseData> load_corpus(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root))
        throw io_error(root.string() + " is not a directory");
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta"))
            dirs.push_back(entry.path());
    require(!dirs.empty(), "load_corpus: no cases under " + root.string());
    std::sort(dirs.begin(), dirs.end());
    std::vector<CaseData> cases;
    cases.reserve(dirs.size());
    for (const auto& dir : dirs) cases.push_back(load_case(dir));
    std::sort(cases.begin(), cases.end(),
              [](const CaseData& a, const CaseData& b) { return a.id < b.id; });
    return cases;
}

}  // namespace hnseg
