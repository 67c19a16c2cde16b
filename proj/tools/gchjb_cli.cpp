#include <iostream>

#include "gchjb/cli.hpp"

int main(int argc, char** argv) { return gchjb::run_cli(argc, argv, std::cout, std::cerr); }
