// Writes the built-in masks as binary PGM files: kflow_masks <dir> [size]
#include <iostream>
#include <string>

#include "kflow/pgm.hpp"
#include "kflow/shapes.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: kflow_masks <dir> [size]\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  const int size = argc > 2 ? std::stoi(argv[2]) : 128;
  for (const char* name : {"disk", "heart", "spiral"}) {
    kflow::pgm_write(dir / (std::string(name) + ".pgm"), kflow::builtin_mask(name, size));
    std::cout << (dir / (std::string(name) + ".pgm")).string() << "\n";
  }
  return 0;
}
