#include <iostream>
#include <string>
#include <vector>

#include "treemot/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return treemot::run_cli(args, std::cout, std::cerr);
}
