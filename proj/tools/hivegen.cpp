#include <iostream>

#include "hivegen/cli/cli.hpp"

int main(int argc, char** argv) { return hivegen::cli::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
