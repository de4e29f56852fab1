#include <iostream>

#include "snl/cli.hpp"

int main(int argc, char** argv) {
  return snl::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
