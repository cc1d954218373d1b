#include "greenprec/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return greenprec::cli::main(argc, argv, std::cout, std::cerr); }
