#include <iostream>

#include "betr/cli.hpp"

int main(int argc, char** argv) {
  return betr::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
