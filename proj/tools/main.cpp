#include <iostream>

#include "nod/cli.hpp"

int main(int argc, char** argv) { return nod::cli::run(argc, argv, std::cout, std::cerr); }
