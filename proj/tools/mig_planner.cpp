#include <iostream>
#include <string>
#include <vector>

#include "migplan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return migplan::dispatch(args, std::cout, std::cerr);
}
