#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "dran/config.hpp"
#include "dran/error.hpp"
#include "dran/image_io.hpp"
#include "dran/random.hpp"

using namespace dran;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("dran_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

}  // namespace

TEST(ConfigTest, ParsesDocumentedExample) {
    const auto doc = nlohmann::json::parse(
        R"({"epsilon":1e-5,"resize":"bilinear","gate":"scalar","regions":{"1":{"name":"eyes","levels":[1,6,"half"]},"2":{"name":"lip","levels":[1,"half"]}}})");
    const auto cfg = DranConfig::from_json(doc);
    EXPECT_EQ(cfg.epsilon, 1e-5);
    EXPECT_EQ(cfg.resize, ResizeMode::Bilinear);
    EXPECT_EQ(cfg.gate, GateMode::Scalar);
    EXPECT_FALSE(cfg.masked_stats);
    ASSERT_EQ(cfg.regions.size(), 2u);
    EXPECT_EQ(cfg.regions.at(1).name, "eyes");
    EXPECT_EQ(cfg.regions.at(1).levels, detail_region_levels());
    EXPECT_EQ(cfg.regions.at(2).levels, coarse_region_levels());
}

TEST(ConfigTest, RoundTripsAndAcceptsSlashForm) {
    const auto cfg = DranConfig::from_json(nlohmann::json::parse(
        R"({"resize":"nearest","gate":"spatial","masked_stats":true,"regions":{"7":{"name":"x","levels":[2,"n/2"]}}})"));
    EXPECT_EQ(cfg.regions.at(7).levels[1], PyramidLevel::half());
    const auto again = DranConfig::from_json(cfg.to_json());
    EXPECT_EQ(again.to_json(), cfg.to_json());
    EXPECT_EQ(again.resize, ResizeMode::Nearest);
    EXPECT_EQ(again.gate, GateMode::Spatial);
    EXPECT_TRUE(again.masked_stats);
}

TEST(ConfigTest, RejectsBadDocuments) {
    for (const char* text : {
             R"([1,2])",
             R"({"epsilon":0,"regions":{"1":{"levels":[1]}}})",
             R"({"regions":{"0":{"levels":[1]}}})",
             R"({"regions":{"300":{"levels":[1]}}})",
             R"({"regions":{"1":{"levels":[]}}})",
             R"({"regions":{"1":{"levels":[0]}}})",
             R"({"regions":{"1":{"levels":["quarter"]}}})",
             R"({"resize":"bicubic","regions":{"1":{"levels":[1]}}})",
             R"({"gate":"soft","regions":{"1":{"levels":[1]}}})",
         }) {
        EXPECT_THROW(DranConfig::from_json(nlohmann::json::parse(text)), ConfigError) << text;
    }
    EXPECT_THROW(DranConfig::load("/nonexistent/config.json"), Error);
}

TEST(GateJsonTest, RoundTripAndValidation) {
    const auto cfg = uniform_config(2, {PyramidLevel::fixed(1), PyramidLevel::half()}, GateMode::Spatial);
    const auto gates = random_gates(cfg, 3, 42);
    const auto back = gates_from_json(gates_to_json(gates));
    ASSERT_EQ(back.size(), 2u);
    for (const auto& [id, pair] : gates) {
        EXPECT_EQ(back.at(id).reference.conv.kernel, pair.reference.conv.kernel);
        EXPECT_EQ(back.at(id).source.conv.bias, pair.source.conv.bias);
        EXPECT_EQ(back.at(id).reference.mode, GateMode::Spatial);
    }
    EXPECT_NO_THROW(validate_gates(back, cfg, 3));
    EXPECT_THROW(validate_gates(back, cfg, 2), ConfigError);

    auto doc = gates_to_json(gates);
    doc["gates"]["1"]["source"]["bias"] = {0.0};
    EXPECT_THROW(gates_from_json(doc), ConfigError);
}

TEST(GateJsonTest, ZeroGatesAreUniformAndModeOverride) {
    const auto cfg = uniform_config(1, {PyramidLevel::fixed(1), PyramidLevel::fixed(2), PyramidLevel::half()});
    auto gates = zero_gates(cfg, 2);
    EXPECT_EQ(gates.at(1).reference.branches(), 3);
    EXPECT_EQ(gates.at(1).reference.in_channels(), 4);
    set_gate_mode(gates, GateMode::Spatial);
    EXPECT_EQ(gates.at(1).source.mode, GateMode::Spatial);
}

TEST(ImageIoTest, RgbRoundTripQuantizes) {
    TempDir dir;
    Rng rng(1);
    const auto img = random_map(rng, 3, 5, 7);
    io::write_rgb_png(dir.file("a.png"), img);
    const auto back = io::read_rgb_png(dir.file("a.png"));
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i)
        EXPECT_EQ(back.data()[i], io::quantize(img.data()[i]) / 255.0);
    EXPECT_EQ(io::quantize(-0.3), 0);
    EXPECT_EQ(io::quantize(1.7), 255);
    EXPECT_EQ(io::quantize(0.5), 128);
}

TEST(ImageIoTest, MaskRoundTrip) {
    TempDir dir;
    Rng rng(2);
    const auto mask = random_mask(rng, 9, 4, 3);
    io::write_mask_png(dir.file("m.png"), mask);
    EXPECT_TRUE(io::read_mask_png(dir.file("m.png")) == mask);
    // An RGB image is not a label map.
    io::write_rgb_png(dir.file("rgb.png"), FeatureMap(3, 2, 2, 0.5));
    EXPECT_THROW(io::read_mask_png(dir.file("rgb.png")), IoError);
}

TEST(ImageIoTest, FailuresLeaveNoFile) {
    TempDir dir;
    EXPECT_THROW(io::read_rgb_png(dir.file("missing.png")), IoError);
    {
        std::ofstream junk(dir.file("junk.png"));
        junk << "not a png";
    }
    EXPECT_THROW(io::read_rgb_png(dir.file("junk.png")), IoError);
    EXPECT_THROW(io::write_rgb_png(dir.file("no/such/dir/out.png"), FeatureMap(3, 2, 2)), IoError);
    EXPECT_THROW(io::write_rgb_png(dir.file("two_channel.png"), FeatureMap(2, 2, 2)), InvalidArgument);
    EXPECT_FALSE(fs::exists(dir.file("two_channel.png")));
}
