#include <iostream>

#include "arforge/cli/cli.hpp"

int main(int argc, char **argv) { return arforge::cli::run_command(argc, argv, std::cout, std::cerr); }
