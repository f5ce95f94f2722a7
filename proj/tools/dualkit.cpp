#include <iostream>

#include "dualkit/cli.hpp"

int main(int argc, char** argv) { return dualkit::cli::main(argc, argv, std::cout, std::cerr); }
