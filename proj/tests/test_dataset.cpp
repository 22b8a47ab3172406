#include <gtest/gtest.h>

#include <fstream>

#include "mfeo/dataset.hpp"
#include "testutil.hpp"

namespace {

namespace fs = std::filesystem;

void write_sequence(const fs::path& root, const std::string& seq, int frames, double base) {
    fs::create_directories(root / seq);
    for (int f = 0; f < frames; ++f) {
        mfeo::GrayImage img(8, 8, std::min(1.0, base + 0.1 * f));
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03d.pgm", f);
        mfeo::write_pgm(img, (root / seq / name).string());
    }
}

TEST(LoadDataset, EmptyLabelsIsDatasetError) {
    testutil::TempDir tmp("ds_empty");
    const auto labels = tmp.path() / "labels.csv";
    std::ofstream(labels) << "sequence_id,subject_id,label\n";
    EXPECT_THROW(mfeo::data::load_dataset(tmp.str(), labels.string(), 8), mfeo::DataError);
}

TEST(LoadDataset, NeutralIsFirstFrameApexIsLast) {
    testutil::TempDir tmp("ds_order");
    write_sequence(tmp.path(), "s1", 2, 0.2);
    write_sequence(tmp.path(), "s2", 2, 0.4);
    const auto labels = tmp.path() / "labels.csv";
    std::ofstream(labels) << "sequence_id,subject_id,label\ns1,p1,happy\ns2,p2,anger\n";
    const auto ds = mfeo::data::load_dataset(tmp.str(), labels.string(), 8);
    ASSERT_EQ(ds.samples.size(), 2u);
    EXPECT_TRUE(ds.errors.empty());
    // constant 0.2 first frame, constant 0.3 second frame
    EXPECT_NEAR(ds.samples[0].neutral.at(3, 3), 0.2, 0.01);
    EXPECT_NEAR(ds.samples[0].apex.at(3, 3), 0.3, 0.01);
}

TEST(LoadDataset, MissingDirectoryIsPerRowError) {
    testutil::TempDir tmp("ds_missing");
    write_sequence(tmp.path(), "a", 3, 0.1);
    write_sequence(tmp.path(), "c", 3, 0.2);
    const auto labels = tmp.path() / "labels.csv";
    std::ofstream(labels) << "sequence_id,subject_id,label\na,p1,happy\nb,p2,anger\nc,p3,happy\n";
    const auto ds = mfeo::data::load_dataset(tmp.str(), labels.string(), 8);
    EXPECT_EQ(ds.samples.size(), 2u);
    ASSERT_EQ(ds.errors.size(), 1u);
    EXPECT_EQ(ds.errors[0].sequence_id, "b");
    // order preserved: a then c
    EXPECT_EQ(ds.samples[0].sequence_id, "a");
    EXPECT_EQ(ds.samples[1].sequence_id, "c");
}

TEST(LoadDataset, SingleFrameSequenceIsPerRowError) {
    testutil::TempDir tmp("ds_short");
    write_sequence(tmp.path(), "a", 1, 0.1);
    write_sequence(tmp.path(), "b", 2, 0.1);
    const auto labels = tmp.path() / "labels.csv";
    std::ofstream(labels) << "sequence_id,subject_id,label\na,p1,happy\nb,p2,anger\n";
    const auto ds = mfeo::data::load_dataset(tmp.str(), labels.string(), 8);
    EXPECT_EQ(ds.samples.size(), 1u);
    EXPECT_EQ(ds.errors.size(), 1u);
}

TEST(LoadDataset, ClassIdsAreDenseAndSorted) {
    testutil::TempDir tmp("ds_classes");
    for (const char* seq : {"s1", "s2", "s3"}) write_sequence(tmp.path(), seq, 2, 0.3);
    const auto labels = tmp.path() / "labels.csv";
    std::ofstream(labels)
        << "sequence_id,subject_id,label\ns1,p1,happy\ns2,p2,anger\ns3,p3,happy\n";
    const auto ds = mfeo::data::load_dataset(tmp.str(), labels.string(), 8);
    ASSERT_EQ(ds.classes.size(), 2u);
    EXPECT_EQ(ds.classes[0].name, "anger");
    EXPECT_EQ(ds.classes[0].id, 0);
    EXPECT_EQ(ds.classes[1].name, "happy");
    EXPECT_EQ(ds.samples[0].label, 1);
    EXPECT_EQ(ds.samples[1].label, 0);
}

TEST(LoadDataset, BadHeaderRejected) {
    testutil::TempDir tmp("ds_header");
    const auto labels = tmp.path() / "labels.csv";
    std::ofstream(labels) << "seq,subject,emotion\na,p,happy\n";
    EXPECT_THROW(mfeo::data::load_dataset(tmp.str(), labels.string(), 8), mfeo::DataError);
}

TEST(LoadDataset, DeterministicAcrossLoads) {
    testutil::TempDir tmp("ds_deterministic");
    const auto ds_spec = testutil::write_synthetic_dataset(tmp.path());
    const auto a = mfeo::data::load_dataset(ds_spec.root.string(), ds_spec.labels.string(), 32);
    const auto b = mfeo::data::load_dataset(ds_spec.root.string(), ds_spec.labels.string(), 32);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].sequence_id, b.samples[i].sequence_id);
        EXPECT_EQ(a.samples[i].neutral.data, b.samples[i].neutral.data);
        EXPECT_EQ(a.samples[i].apex.data, b.samples[i].apex.data);
    }
}

TEST(LoadDataset, AllSamplesSatisfyImageInvariants) {
    testutil::TempDir tmp("ds_invariants");
    const auto ds_spec = testutil::write_synthetic_dataset(tmp.path());
    const auto ds = mfeo::data::load_dataset(ds_spec.root.string(), ds_spec.labels.string(), 24);
    ASSERT_FALSE(ds.samples.empty());
    for (const auto& s : ds.samples) {
        EXPECT_TRUE(s.neutral.valid());
        EXPECT_TRUE(s.apex.valid());
        EXPECT_EQ(s.neutral.width, 24);
        EXPECT_EQ(s.apex.height, 24);
    }
}

}  // namespace
