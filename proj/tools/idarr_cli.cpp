#include <iostream>
#include <string>
#include <vector>

#include "idarr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return idarr::cli::run(args, std::cout, std::cerr);
}
