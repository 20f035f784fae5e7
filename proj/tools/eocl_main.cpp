#include <iostream>
#include <string>
#include <vector>

#include "eocl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return eocl::run_cli(args, std::cout, std::cerr);
}
