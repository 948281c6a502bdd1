#include <iostream>

#include "pbwos/cli.hpp"

int main(int argc, char** argv) { return pbwos::cli::main(argc, argv, std::cout, std::cerr); }
