#include "mpcl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mpcl::cli::main(argc, argv, std::cout, std::cerr); }
