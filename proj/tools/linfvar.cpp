#include <iostream>
#include <string>
#include <vector>

#include "linfvar/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return linfvar::cli::run(args, std::cout, std::cerr);
}
