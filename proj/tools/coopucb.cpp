#include <iostream>
#include <string>
#include <vector>

#include "coopucb/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return coopucb::cli::run(args, std::cout, std::cerr);
}
