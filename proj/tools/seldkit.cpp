#include <iostream>
#include <string>
#include <vector>

#include "seld/cli.hpp"

int main(int argc, char** argv) {
  return seld::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
