// Regenerates the committed fixture images:
//   dreamhone_make_fixtures <fixtures-dir>

#include <dreamhone/image_io.hpp>

#include <iostream>

#include "fixtures.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: dreamhone_make_fixtures <fixtures-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  dreamhone::save_png(fixtures::stripes_source(), dir / "stripes_source.png");
  dreamhone::save_png(fixtures::checker_guide(), dir / "checker_guide.png");
  return 0;
}
