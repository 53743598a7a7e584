#include <iostream>

#include "dmf/cli.hpp"

int main(int argc, char** argv) { return dmf::run_cli(argc, argv, std::cout, std::cerr); }
