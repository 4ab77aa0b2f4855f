#include <iostream>
#include <string>
#include <vector>

#include "corrbin/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return corrbin::cli::run(args, std::cout, std::cerr);
}
