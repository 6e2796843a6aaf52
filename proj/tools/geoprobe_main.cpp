#include <iostream>

#include "geoprobe/commands.hpp"

int main(int argc, char** argv) {
  return geoprobe::cli::run(argc, argv, std::cout, std::cerr);
}
