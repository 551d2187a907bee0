#include <iostream>
#include <string>
#include <vector>

#include "equalizer/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return equalizer::cli::run(args, std::cout, std::cerr);
}
