#include <iostream>

#include "mcarsense/cli.hpp"

int main(int argc, char** argv) { return mcarsense::run_cli(argc, argv, std::cout, std::cerr); }
