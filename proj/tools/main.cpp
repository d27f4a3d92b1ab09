#include <iostream>
#include <string>
#include <vector>

#include "stlplan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stlplan::run_cli(args, std::cout, std::cerr);
}
