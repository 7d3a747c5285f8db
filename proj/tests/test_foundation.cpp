// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "mcdepth/config.hpp"
#include "mcdepth/error.hpp"
#include "mcdepth/io.hpp"
#include "mcdepth/raster.hpp"
#include "mcdepth/rng.hpp"
#include "test_util.hpp"

namespace mcdepth {
namespace {

using testing::TempDir;

// Reference outputs of the published SplitMix64 generator.
TEST(SplitMix64, MatchesReferenceSequence) {
  SplitMix64 a(0);
  EXPECT_EQ(a.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(a.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(a.next(), 0x06C45D188009454FULL);
  SplitMix64 b(1234567);
  EXPECT_EQ(b.next(), 6457827717110365317ULL);
  EXPECT_EQ(b.next(), 3203168211198807973ULL);
}

TEST(SplitMix64, SplitDoesNotAdvanceParent) {
  SplitMix64 r(42);
  const std::uint64_t before = r.state();
  SplitMix64 c1 = r.split("pose");
  SplitMix64 c2 = r.split("pose");
  EXPECT_EQ(r.state(), before);
  EXPECT_EQ(c1.next(), c2.next());
  EXPECT_NE(r.split("pose").next(), r.split("scene").next());
  EXPECT_NE(r.split(1).next(), r.split(2).next());
}

TEST(SplitMix64, UniformAndBelowStayInRange) {
  SplitMix64 r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(13), 13u);
  }
}

TEST(Fnv1a64, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xAF63DC4C8601EC8CULL);
}

TEST(KeyValues, ParseFormatRoundTrip) {
  const KeyValues kv = KeyValues::parse("# comment\nlr = 0.001\nname = orchard  \n\nflag = true\n");
  EXPECT_DOUBLE_EQ(kv.get_double("lr", 0.0), 1e-3);
  EXPECT_EQ(kv.get_string("name", ""), "orchard");
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_EQ(kv.get_int("missing", 17), 17);
  const KeyValues again = KeyValues::parse(kv.format());
  EXPECT_EQ(again.entries(), kv.entries());
}

TEST(KeyValues, MalformedValuesAreConfigErrors) {
  const KeyValues kv = KeyValues::parse("lr = fast\nepochs = 2.5\n");
  try {
    (void)kv.get_double("lr", 0.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  EXPECT_THROW((void)kv.get_int("epochs", 0), Error);
  try {
    kv.reject_unknown({"lr"});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("epochs"), std::string::npos);
  }
}

TEST(FormatDouble, RoundTripsExactly) {
  SplitMix64 r(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::ldexp(r.uniform(-1.0, 1.0), static_cast<int>(r.below(80)) - 40);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Pfm, RoundTripAndBottomUpRowOrder) {
  const TempDir dir("pfm");
  io::FloatGrid g{3, 2, {1, 2, 3, 4, 5, 6}};
  io::write_pfm(dir / "g.pfm", g);
  const io::FloatGrid back = io::read_pfm(dir / "g.pfm");
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.height, 2);
  EXPECT_EQ(back.values, g.values);

  // First stored row is the bottom image row.
  const std::string raw = io::read_text(dir / "g.pfm");
  ASSERT_EQ(raw.rfind("Pf\n3 2\n-1", 0), 0u);
  float first = 0.0f;
  std::memcpy(&first, raw.data() + raw.size() - 6 * sizeof(float), sizeof(float));
  EXPECT_EQ(first, 4.0f);
}

TEST(Pfm, ReadsBigEndianAndRejectsColour) {
  const TempDir dir("pfm-be");
  {
    std::ofstream out(dir / "be.pfm", std::ios::binary);
    out << "Pf\n2 1\n1.0\n";
    for (float v : {1.5f, -2.25f}) {
      unsigned char b[4];
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (24 - 8 * i));
      out.write(reinterpret_cast<const char*>(b), 4);
    }
  }
  const io::FloatGrid g = io::read_pfm(dir / "be.pfm");
  EXPECT_EQ(g.values, (std::vector<float>{1.5f, -2.25f}));

  {
    std::ofstream out(dir / "rgb.pfm", std::ios::binary);
    out << "PF\n1 1\n-1.0\n";
    const float px[3] = {0, 0, 0};
    out.write(reinterpret_cast<const char*>(px), sizeof(px));
  }
  try {
    (void)io::read_pfm(dir / "rgb.pfm");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(Pfm, DepthKeepsInvalidZeros) {
  const TempDir dir("depth");
  DepthMap d(4, 3);
  d.at(1, 2) = 12.5;
  d.at(3, 0) = 80.0;
  io::write_depth_pfm(dir / "d.pfm", d);
  const DepthMap back = io::read_depth_pfm(dir / "d.pfm", DepthKind::kSparse);
  EXPECT_EQ(back, d);
  EXPECT_EQ(back.count_valid(), 2u);
}

TEST(Pnm, PpmRoundTripMatchesQuantize) {
  const TempDir dir("ppm");
  SplitMix64 r(11);
  const Image img = testing::random_image(5, 4, r);
  io::write_ppm(dir / "x.ppm", img);
  EXPECT_EQ(io::read_pnm(dir / "x.ppm"), io::quantize8(img));
  EXPECT_THROW((void)io::read_pnm(dir / "missing.ppm"), Error);
}

TEST(Raster, LumaCoefficients) {
  Image img(1, 1);
  img.at(0, 0, 0) = 1.0;
  EXPECT_NEAR(to_gray(img).at(0, 0), 0.299, 1e-15);
  img.at(0, 0, 1) = 1.0;
  img.at(0, 0, 2) = 1.0;
  EXPECT_NEAR(to_gray(img).at(0, 0), 1.0, 1e-15);
}

TEST(Raster, ResizeIdentityAndNearestKeepsZeros) {
  SplitMix64 r(5);
  const Image img = testing::random_image(6, 4, r);
  const Image same = resize_bilinear(img, 6, 4);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) EXPECT_NEAR(same.rgb[i], img.rgb[i], 1e-15);

  DepthMap d(4, 4);
  d.at(1, 1) = 7.0;
  const DepthMap up = resize_nearest(d, 8, 8);
  EXPECT_EQ(up.count_valid(), 4u);
  for (double v : up.values) EXPECT_TRUE(v == 0.0 || v == 7.0);
}

TEST(Raster, CappedZeroesAboveCap) {
  DepthMap d(3, 1);
  d.values = {10.0, 80.0, 80.5};
  const DepthMap c = d.capped(80.0);
  EXPECT_EQ(c.values, (std::vector<double>{10.0, 80.0, 0.0}));
  EXPECT_EQ(d.capped(0.0), d);
}

}  // namespace
}  // namespace mcdepth
