#include <dreamhone/image_io.hpp>
#include <gtest/gtest.h>

#include "../support/fixtures.hpp"

using namespace dreamhone;

TEST(Fixtures, CommittedImagesMatchGenerator) {
  EXPECT_EQ(read_file(fixtures::dir() / "stripes_source.png"), encode_png(fixtures::stripes_source()));
  EXPECT_EQ(read_file(fixtures::dir() / "checker_guide.png"), encode_png(fixtures::checker_guide()));
  EXPECT_EQ(load_png(fixtures::dir() / "stripes_source.png").dims(), (Shape{3, 64, 64}));
}

TEST(ImageIo, PngRoundTripIsExactOnQuantizedValues) {
  const Tensor img = load_png(fixtures::dir() / "checker_guide.png");
  EXPECT_EQ(decode_png(encode_png(img)), img);
  EXPECT_THROW(decode_png("not a png"), InputError);
  EXPECT_THROW(load_png(fixtures::dir() / "missing.png"), Error);
}
