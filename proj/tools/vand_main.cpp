#include <iostream>

#include "vand/cli.hpp"

int main(int argc, char** argv) { return vand::cli::run_cli(argc, argv, std::cout, std::cerr); }
