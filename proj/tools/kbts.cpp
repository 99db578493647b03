#include <iostream>
#include <string>
#include <vector>

#include "kbts/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return kbts::cli::run(args, std::cout, std::cerr);
}
