#include <iostream>

#include "twlasso/cli.hpp"

int main(int argc, char** argv) { return twlasso::run_cli(argc, argv, std::cout, std::cerr); }
