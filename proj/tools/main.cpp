#include <iostream>

#include "hybridrf/cli.hpp"

int main(int argc, char** argv) {
  return hybridrf::cli::run(argc, argv, std::cout, std::cerr);
}
