#include <iostream>
#include <string>
#include <vector>

#include "edithumor/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return edithumor::run_cli(args, std::cout, std::cerr);
}
