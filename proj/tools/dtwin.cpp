#include <iostream>

#include "dtwin/cli.hpp"

int main(int argc, char** argv) {
  return dtwin::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
