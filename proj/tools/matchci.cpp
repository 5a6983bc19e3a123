#include <iostream>
#include <string>
#include <vector>

#include "matchci/cli.hpp"

int main(int argc, char** argv) {
  return matchci::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout,
                          std::cerr);
}
