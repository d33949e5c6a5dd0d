#include <cmath>
#include <complex>
#include <fstream>

#include <gtest/gtest.h>

#include "seizure/error.hpp"
#include "seizure/features.hpp"
#include "seizure/mspca.hpp"
#include "test_util.hpp"

using namespace seizure;

namespace {

constexpr double kPi = 3.141592653589793;

std::vector<double> tone(double hz, std::size_t n = 2048, double amplitude = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amplitude * std::sin(2.0 * kPi * hz * static_cast<double>(i) / kSampleRateHz);
  return x;
}

/// Frequency (Hz) of the largest DFT magnitude bin in (0, fs/2).
double dominant_frequency(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double best = -1.0;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * t % n) / static_cast<double>(n));
    }
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_k = k;
    }
  }
  return static_cast<double>(best_k) * kSampleRateHz / static_cast<double>(n);
}

/// Natural (filter-path) index of the frequency-ordered band `f`.
std::size_t natural_leaf(std::size_t f) { return f ^ (f >> 1); }

std::size_t max_power_leaf(const FeatureVector& fv, std::size_t leaves) {
  std::size_t best = 0;
  for (std::size_t b = 1; b < leaves; ++b) {
    if (fv.values[b * kStatisticsPerLeaf + 1] > fv.values[best * kStatisticsPerLeaf + 1]) best = b;
  }
  return best;
}

SegmentMatrix random_chunk(std::uint64_t seed, Phase phase, std::size_t index = 0) {
  SegmentMatrix m;
  m.channel_count = 3;
  m.chunk_index = index;
  m.source_phase = phase;
  m.values = testutil::random_matrix(kSegmentLength, 3 * kSegmentsPerChunk, seed);
  return m;
}

}  // namespace

TEST(Features, ThreeChannelsLevelFourGive192Values) {
  const auto a = testutil::random_signal(2048, 1);
  const auto b = testutil::random_signal(2048, 2);
  const auto c = testutil::random_signal(2048, 3);
  const std::vector<std::span<const double>> ch{a, b, c};
  const FeatureVector fv = extract_segment_features(ch, FilterPair::db4(), 4);
  EXPECT_EQ(fv.values.size(), 192u);
  EXPECT_EQ(fv.names.size(), 192u);
  EXPECT_EQ(fv.names.front(), "ch0_b0_mav");
  EXPECT_EQ(fv.names.back(), "ch2_b15_ratio");
  for (double v : fv.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Features, ZeroSegmentGivesZeroStatistics) {
  const std::vector<double> z(2048, 0.0);
  const std::vector<std::span<const double>> ch{z, z};
  for (double v : extract_segment_features(ch, FilterPair::db4(), 4).values) EXPECT_EQ(v, 0.0);
}

TEST(Features, HundredHertzToneLandsInItsBand) {
  const auto x = tone(100.0);
  const double f = dominant_frequency(x);
  ASSERT_NEAR(f, 100.0, 0.2);
  const std::size_t band = static_cast<std::size_t>(f / (kSampleRateHz / 2.0 / 16.0));
  ASSERT_EQ(band, 12u);
  const std::vector<std::span<const double>> ch{x};
  EXPECT_EQ(max_power_leaf(extract_segment_features(ch, FilterPair::db4(), 4), 16), natural_leaf(band));
}

TEST(Features, ToneBandFollowsFilterPathOrdering) {
  for (double hz : {4.0, 20.0, 44.0, 60.0, 76.0, 116.0}) {
    const auto x = tone(hz);
    const auto band = static_cast<std::size_t>(dominant_frequency(x) / 8.0);
    const std::vector<std::span<const double>> ch{x};
    EXPECT_EQ(max_power_leaf(extract_segment_features(ch, FilterPair::db4(), 4), 16), natural_leaf(band))
        << hz << " Hz";
  }
}

TEST(Features, StatisticsMatchDirectComputation) {
  const auto x = testutil::random_signal(2048, 21);
  const std::vector<std::span<const double>> ch{x};
  const FeatureVector fv = extract_segment_features(ch, FilterPair::haar(), 2);
  const WpdTree t = wpd(x, FilterPair::haar(), 2);
  for (std::size_t b = 0; b < 4; ++b) {
    const auto& leaf = t.leaves[b];
    double mav = 0.0, power = 0.0, mean = 0.0;
    for (double v : leaf) {
      mav += std::abs(v);
      power += v * v;
      mean += v;
    }
    mav /= leaf.size();
    power /= leaf.size();
    mean /= leaf.size();
    double var = 0.0;
    for (double v : leaf) var += (v - mean) * (v - mean);
    double next_mav = 0.0;
    for (double v : t.leaves[(b + 1) % 4]) next_mav += std::abs(v);
    next_mav /= leaf.size();
    EXPECT_NEAR(fv.values[b * 4 + 0], mav, 1e-12);
    EXPECT_NEAR(fv.values[b * 4 + 1], power, 1e-12);
    EXPECT_NEAR(fv.values[b * 4 + 2], std::sqrt(var / leaf.size()), 1e-12);
    EXPECT_NEAR(fv.values[b * 4 + 3], mav / next_mav, 1e-12);
  }
}

TEST(Features, ScalingIsHomogeneous) {
  const auto x = testutil::random_signal(2048, 5);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = -3.0 * x[i];
  const std::vector<std::span<const double>> cx{x};
  const std::vector<std::span<const double>> cy{y};
  const auto fx = extract_segment_features(cx, FilterPair::db4(), 4).values;
  const auto fy = extract_segment_features(cy, FilterPair::db4(), 4).values;
  for (std::size_t b = 0; b < 16; ++b) {
    EXPECT_NEAR(fy[b * 4 + 0], 3.0 * fx[b * 4 + 0], 1e-9);
    EXPECT_NEAR(fy[b * 4 + 1], 9.0 * fx[b * 4 + 1], 1e-9);
    EXPECT_NEAR(fy[b * 4 + 2], 3.0 * fx[b * 4 + 2], 1e-9);
    EXPECT_NEAR(fy[b * 4 + 3], fx[b * 4 + 3], 1e-9);
  }
}

TEST(Features, WrongSegmentLengthIsRejected) {
  const std::vector<double> x(1024, 1.0);
  const std::vector<std::span<const double>> ch{x};
  EXPECT_THROW(extract_segment_features(ch, FilterPair::db4(), 4), ShapeError);
  EXPECT_THROW(extract_segment_features({}, FilterPair::db4(), 4), ShapeError);
}

TEST(FeatureTable, OneInterictalChunkGivesSixtyRows) {
  const std::vector<SegmentMatrix> chunks{random_chunk(1, Phase::interictal)};
  const FeatureTable t = build_feature_table(chunks, FeatureConfig{});
  EXPECT_EQ(t.rows(), 60u);
  EXPECT_EQ(t.feature_count(), 192u);
  EXPECT_EQ(t.count(ClassLabel::interictal), 60u);
}

TEST(FeatureTable, EmptyInputGivesEmptyTable) {
  EXPECT_TRUE(build_feature_table({}, FeatureConfig{}).empty());
}

TEST(FeatureTable, BuildIsDeterministic) {
  const std::vector<SegmentMatrix> chunks{random_chunk(3, Phase::interictal),
                                          random_chunk(4, Phase::preictal, 1)};
  const FeatureTable a = build_feature_table(chunks, FeatureConfig{});
  const FeatureTable b = build_feature_table(chunks, FeatureConfig{});
  EXPECT_EQ(encode_table(a), encode_table(b));
  EXPECT_EQ(a.rows(), 120u);
  EXPECT_EQ(a.label(59), ClassLabel::interictal);
  EXPECT_EQ(a.label(60), ClassLabel::preictal);
}

TEST(FeatureTable, RowsFollowSegmentOrder) {
  SegmentMatrix chunk = random_chunk(8, Phase::interictal);
  const FeatureTable t = chunk_features(chunk, FeatureConfig{});
  const Eigen::MatrixXd clean = mspca_denoise(chunk.values, FilterPair::db4(), 4);
  for (int s : {0, 17, 59}) {
    std::vector<std::span<const double>> views;
    for (int c = 0; c < 3; ++c) views.emplace_back(clean.col(chunk.column(c, s)).data(), 2048);
    const FeatureVector fv = extract_segment_features(views, FilterPair::db4(), 4);
    const auto row = t.row(static_cast<std::size_t>(s));
    EXPECT_TRUE(std::equal(row.begin(), row.end(), fv.values.begin())) << "segment " << s;
  }
}

TEST(FeatureTable, NonInterictalPhasesArePreictal) {
  for (Phase p : {Phase::preictal, Phase::ictal, Phase::mixed}) {
    EXPECT_EQ(label_for(p), ClassLabel::preictal);
  }
  EXPECT_EQ(label_for(Phase::interictal), ClassLabel::interictal);
  const std::vector<SegmentMatrix> chunks{random_chunk(5, Phase::mixed)};
  EXPECT_EQ(build_feature_table(chunks, FeatureConfig{}).count(ClassLabel::preictal), 60u);
}

TEST(FeatureTable, MismatchedGeometryIsRejected) {
  SegmentMatrix a = random_chunk(1, Phase::interictal);
  SegmentMatrix b = a;
  b.channel_count = 2;
  b.segments_per_chunk = 90;
  const std::vector<SegmentMatrix> chunks{a, b};
  EXPECT_THROW(build_feature_table(chunks, FeatureConfig{}), ShapeError);
  FeatureTable t(std::vector<std::string>{"x", "y"});
  const std::vector<double> three{1, 2, 3};
  EXPECT_THROW(t.add_row(three, ClassLabel::interictal), ShapeError);
}

TEST(FeatureTable, CsvRoundTripIsExact) {
  testutil::TempDir dir("features");
  const FeatureTable t = testutil::two_gaussians(4, 30, 5);
  write_feature_csv(t, dir / "t.csv");
  EXPECT_EQ(read_feature_csv(dir / "t.csv"), t);
}

TEST(FeatureTable, CsvErrorsCarryLineNumbers) {
  testutil::TempDir dir("features");
  {
    std::ofstream out(dir / "bad.csv");
    out << "a,b,label\n1,2,interictal\n1,x,preictal\n";
  }
  try {
    read_feature_csv(dir / "bad.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
  {
    std::ofstream out(dir / "nolabel.csv");
    out << "a,b\n1,2\n";
  }
  EXPECT_THROW(read_feature_csv(dir / "nolabel.csv"), ParseError);
}

TEST(FeatureTable, BinaryRoundTripAndTruncation) {
  const FeatureTable t = testutil::two_gaussians(9, 20, 4);
  const std::string bytes = encode_table(t);
  EXPECT_EQ(decode_table(bytes), t);
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(decode_table(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
  }
  EXPECT_THROW(decode_table(bytes + "x"), FormatError);
}

TEST(FeatureTable, SubsetAndAppend) {
  const FeatureTable t = testutil::two_gaussians(2, 10, 3);
  const std::vector<std::size_t> rows{1, 4, 7};
  const FeatureTable s = t.subset(rows);
  ASSERT_EQ(s.rows(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s.label(i), t.label(rows[i]));
    EXPECT_TRUE(std::equal(s.row(i).begin(), s.row(i).end(), t.row(rows[i]).begin()));
  }
  FeatureTable u = s;
  u.append(s);
  EXPECT_EQ(u.rows(), 6u);
  EXPECT_THROW(u.append(FeatureTable(std::vector<std::string>{"other"})), ShapeError);
}
