#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hnseg/cases.hpp"
#include "hnseg/rng.hpp"
#include "hnseg/volume.hpp"

using namespace hnseg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    const fs::path dir =
        fs::temp_directory_path() / ("hnseg_volume_test_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(VolumeTest, IndexIsXFastest) {
    Volume v(3, 4, 5);
    EXPECT_EQ(v.index(0, 0, 0), 0u);
    EXPECT_EQ(v.index(1, 0, 0), 1u);
    EXPECT_EQ(v.index(0, 1, 0), 3u);
    EXPECT_EQ(v.index(0, 0, 1), 12u);
    EXPECT_EQ(v.size(), 60u);
}

TEST(VolumeTest, BoundingBoxBasics) {
    BoundingBox b;
    b.min = {1, 2, 3};
    b.max = {3, 2, 5};
    EXPECT_EQ(b.extent(0), 3u);
    EXPECT_EQ(b.extent(1), 1u);
    EXPECT_EQ(b.extent(2), 3u);
    EXPECT_EQ(b.num_voxels(), 9u);
    EXPECT_TRUE(b.contains(2, 2, 4));
    EXPECT_FALSE(b.contains(0, 2, 4));
}

TEST(VolumeTest, TightBoxFindsExtremes) {
    MaskVolume m(6, 5, 4);
    m.at(1, 2, 0) = 1;
    m.at(4, 0, 3) = 1;
    const BoundingBox b = tight_box(m);
    EXPECT_EQ(b.min[0], 1);
    EXPECT_EQ(b.max[0], 4);
    EXPECT_EQ(b.min[1], 0);
    EXPECT_EQ(b.max[1], 2);
    EXPECT_EQ(b.min[2], 0);
    EXPECT_EQ(b.max[2], 3);
}

TEST(VolumeTest, TightBoxRejectsEmptyMask) {
    EXPECT_THROW(tight_box(MaskVolume(3, 3, 3)), validation_error);
}

TEST(VolumeTest, VolumeRoundTripIsBitExactThroughFloat) {
    const fs::path dir = temp_dir();
    Rng rng(1);
    Volume v(5, 4, 3);
    v.spacing = {0.75, 1.25, 2.5};
    // Values representable in float32 survive the round trip bit-exactly.
    for (double& x : v.voxels)
        x = static_cast<float>(rng.uniform(-1000.0, 1000.0));

    save_volume(v, dir / "vol");
    const Volume r = load_volume(dir / "vol");
    EXPECT_EQ(r.dims, v.dims);
    EXPECT_EQ(r.spacing, v.spacing);
    ASSERT_EQ(r.voxels.size(), v.voxels.size());
    for (std::size_t i = 0; i < v.voxels.size(); ++i)
        EXPECT_EQ(r.voxels[i], v.voxels[i]);
    fs::remove_all(dir);
}

TEST(VolumeTest, MaskRoundTrip) {
    const fs::path dir = temp_dir();
    Rng rng(2);
    MaskVolume m(4, 6, 2);
    m.spacing = {1, 1, 3};
    for (auto& v : m.voxels) v = rng.uniform_index(2);

    save_mask(m, dir / "mask");
    const MaskVolume r = load_mask(dir / "mask");
    EXPECT_EQ(r.dims, m.dims);
    EXPECT_EQ(r.spacing, m.spacing);
    EXPECT_EQ(r.voxels, m.voxels);
    fs::remove_all(dir);
}

TEST(VolumeTest, LoadRejectsMissingFiles) {
    EXPECT_THROW(load_volume("/nonexistent/path/vol"), io_error);
}

TEST(VolumeTest, LoadRejectsTruncatedRaw) {
    const fs::path dir = temp_dir();
    Volume v(4, 4, 4);
    save_volume(v, dir / "vol");
    fs::resize_file(dir / "vol.raw", 10);
    EXPECT_THROW(load_volume(dir / "vol"), io_error);
    fs::remove_all(dir);
}

TEST(VolumeTest, LoadRejectsMalformedMeta) {
    const fs::path dir = temp_dir();
    {
        std::ofstream meta(dir / "bad.meta");
        meta << "dims 4 4\n";  // missing a dimension
    }
    EXPECT_THROW(load_volume(dir / "bad"), io_error);
    {
        std::ofstream meta(dir / "bad2.meta");
        meta << "dims 4 4 4\nspacing 1 1 1\n";  // missing dtype
    }
    EXPECT_THROW(load_volume(dir / "bad2"), io_error);
    {
        std::ofstream meta(dir / "bad3.meta");
        meta << "dims 0 4 4\nspacing 1 1 1\ndtype float32\n";
    }
    EXPECT_THROW(load_volume(dir / "bad3"), io_error);
    fs::remove_all(dir);
}

TEST(VolumeTest, LoadRejectsWrongDtype) {
    const fs::path dir = temp_dir();
    MaskVolume m(2, 2, 2);
    m.at(0, 0, 0) = 1;
    save_mask(m, dir / "mask");
    EXPECT_THROW(load_volume(dir / "mask"), io_error);  // dtype uint8, not float32
    fs::remove_all(dir);
}

TEST(VolumeTest, MaskLoadRejectsNonBinaryVoxels) {
    const fs::path dir = temp_dir();
    MaskVolume m(2, 2, 1);
    save_mask(m, dir / "mask");
    {
        std::ofstream raw(dir / "mask.raw", std::ios::binary);
        const char bytes[4] = {0, 1, 2, 0};
        raw.write(bytes, 4);
    }
    EXPECT_THROW(load_mask(dir / "mask"), io_error);
    fs::remove_all(dir);
}

TEST(CaseTest, SaveLoadRoundTrip) {
    const fs::path dir = temp_dir();
    CaseData c;
    c.id = "case_007";
    c.image = Volume(4, 4, 3);
    c.image.voxels[5] = -123.5;
    c.mask = MaskVolume(4, 4, 3);
    c.mask.at(1, 1, 1) = 1;

    save_case(c, dir / "case_007");
    const CaseData r = load_case(dir / "case_007");
    EXPECT_EQ(r.id, "case_007");
    EXPECT_EQ(r.image.voxels, c.image.voxels);
    EXPECT_EQ(r.mask.voxels, c.mask.voxels);
    fs::remove_all(dir);
}

TEST(CaseTest, LoadRejectsEmptyMask) {
    const fs::path dir = temp_dir();
    CaseData c;
    c.id = "c";
    c.image = Volume(2, 2, 2);
    c.mask = MaskVolume(2, 2, 2);
    c.mask.at(0, 0, 0) = 1;
    save_case(c, dir / "c");
    {
        MaskVolume empty(2, 2, 2);
        save_mask(empty, dir / "c" / "mask");
    }
    EXPECT_THROW(load_case(dir / "c"), validation_error);
    fs::remove_all(dir);
}

TEST(CaseTest, CorpusLoadsSortedById) {
    const fs::path dir = temp_dir();
    for (const char* id : {"case_002", "case_000", "case_001"}) {
        CaseData c;
        c.id = id;
        c.image = Volume(2, 2, 2);
        c.mask = MaskVolume(2, 2, 2);
        c.mask.at(0, 0, 0) = 1;
        save_case(c, dir / id);
    }
    const auto cases = load_corpus(dir);
    ASSERT_EQ(cases.size(), 3u);
    EXPECT_EQ(cases[0].id, "case_000");
    EXPECT_EQ(cases[1].id, "case_001");
    EXPECT_EQ(cases[2].id, "case_002");
    fs::remove_all(dir);
}
