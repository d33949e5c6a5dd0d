#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "seizure/bytes.hpp"
#include "seizure/error.hpp"
#include "seizure/rotforest.hpp"
#include "test_util.hpp"

using namespace seizure;

namespace {

RotationForestModel small_model() {
  RotationForestConfig cfg;
  cfg.ensemble_size = 5;
  cfg.tree.max_depth = 6;
  cfg.seed = 17;
  return train(testutil::two_gaussians(3, 120, 6, 0.8), cfg);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, std::string_view s) {
  std::ofstream out(p, std::ios::binary);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace

TEST(ModelIo, RoundTripPredictsBitIdentically) {
  testutil::TempDir dir("model");
  const RotationForestModel m = small_model();
  save_model(m, dir / "m.model");
  const RotationForestModel back = load_model(dir / "m.model");
  EXPECT_EQ(back, m);
  Rng rng(5);
  std::vector<double> x(6);
  for (int i = 0; i < 1000; ++i) {
    for (auto& v : x) v = 3.0 * standard_normal(rng);
    const Prediction a = predict(m, x);
    const Prediction b = predict(back, x);
    ASSERT_EQ(a.label, b.label);
    ASSERT_EQ(std::memcmp(&a.confidence, &b.confidence, sizeof(double)), 0);
    ASSERT_EQ(std::memcmp(a.distribution.data(), b.distribution.data(), sizeof(ClassDistribution)), 0);
  }
}

TEST(ModelIo, SerializationIsStable) {
  const RotationForestModel m = small_model();
  const std::string text = serialize_model(m);
  EXPECT_EQ(serialize_model(parse_model(text)), text);
  EXPECT_EQ(text.rfind("rotforest 1\n", 0), 0u);
}

TEST(ModelIo, MemberRoundTrip) {
  const RotationForestModel m = small_model();
  for (const auto& member : m.members()) EXPECT_EQ(parse_member(serialize_member(member)), member);
}

TEST(ModelIo, TruncationIsAFormatError) {
  const std::string text = serialize_model(small_model());
  for (std::size_t cut : {std::size_t{0}, std::size_t{4}, std::size_t{12}, text.size() / 3, text.size() / 2,
                          text.size() - 5, text.size() - 1}) {
    try {
      parse_model(std::string_view(text).substr(0, cut));
      FAIL() << "cut at " << cut << " parsed";
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
    }
  }
}

TEST(ModelIo, TruncatedFileFailsToLoad) {
  testutil::TempDir dir("model");
  save_model(small_model(), dir / "m.model");
  const std::string text = slurp(dir / "m.model");
  spit(dir / "cut.model", std::string_view(text).substr(0, text.size() * 2 / 3));
  EXPECT_THROW(load_model(dir / "cut.model"), FormatError);
}

TEST(ModelIo, NewerVersionIsUnsupported) {
  std::string text = serialize_model(small_model());
  text.replace(0, std::strlen("rotforest 1"), "rotforest 2");
  EXPECT_THROW(parse_model(text), UnsupportedVersionError);
}

TEST(ModelIo, CorruptContentIsRejected) {
  const std::string text = serialize_model(small_model());
  EXPECT_THROW(parse_model("garbage\n"), FormatError);
  EXPECT_THROW(parse_model(text + "extra\n"), FormatError);

  std::string bad_number = text;
  bad_number.replace(bad_number.find("rotation 6 6"), 12, "rotation 6 x");
  EXPECT_THROW(parse_model(bad_number), FormatError);

  std::string bad_leaf = text;
  const auto leaf = bad_leaf.find("\nleaf ");
  ASSERT_NE(leaf, std::string::npos);
  bad_leaf.replace(leaf, 6, "\nlief ");
  EXPECT_THROW(parse_model(bad_leaf), FormatError);
}

TEST(ModelIo, MissingFileIsAnError) {
  EXPECT_THROW(load_model("/nonexistent/seizure.model"), Error);
}
