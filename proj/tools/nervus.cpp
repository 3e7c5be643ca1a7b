#include <iostream>
#include <string>
#include <vector>

#include "nervus/train/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return nervus::train::run_cli(args, std::cout, std::cerr);
}
