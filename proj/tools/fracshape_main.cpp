#include <iostream>

#include "fracshape/cli.hpp"

int main(int argc, char** argv) { return fracshape::cli::main(argc, argv, std::cout, std::cerr); }
