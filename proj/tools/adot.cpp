#include <iostream>

#include "adot/cli.hpp"

int main(int argc, char** argv) { return adot::cli::run(argc, argv, std::cout, std::cerr); }
