#include <iostream>

#include "galax/cli.hpp"

int main(int argc, char** argv) {
  return galax::run_cli(argc, argv, std::cout, std::cerr);
}
