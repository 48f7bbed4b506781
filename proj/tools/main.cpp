#include <iostream>
#include <string>
#include <vector>

#include "harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return grasp::harness::run_cli(args, std::cout, std::cerr);
}
