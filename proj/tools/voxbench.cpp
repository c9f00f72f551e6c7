#include <iostream>

#include "voxbench/cli.hpp"

int main(int argc, char** argv) { return voxbench::run_cli(argc, argv, std::cout, std::cerr); }
