#include <iostream>
#include <string>
#include <vector>

#include "catebench/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return catebench::run_cli(args, std::cout, std::cerr);
}
