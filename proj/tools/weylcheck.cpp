#include <iostream>
#include <string>
#include <vector>

#include "scenario.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return weylcli::run(args, std::cout, std::cerr);
}
