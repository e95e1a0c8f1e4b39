#include <iostream>

#include "anycs_cli.hpp"

int main(int argc, char** argv) { return anycs::cli::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
