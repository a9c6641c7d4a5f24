#include <iostream>

#include "pfn/app/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pfn::app::run(args, std::cout, std::cerr);
}
