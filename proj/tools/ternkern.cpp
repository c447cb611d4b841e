#include "ternkern/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ternkern::run_cli(argc, argv, std::cout, std::cerr); }
