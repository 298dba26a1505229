#include <iostream>
#include <string>
#include <vector>

#include "ucrlb/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ucrlb::cli_main(args, std::cout, std::cerr);
}
