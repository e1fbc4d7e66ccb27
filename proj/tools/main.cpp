#include <iostream>

#include "cpvar/cli.hpp"

int main(int argc, char** argv) {
  return cpvar::cli::run(argc, argv, std::cout, std::cerr);
}
