#include <iostream>

#include "regop/cli.hpp"

int main(int argc, char** argv) { return regop::run_cli(argc, argv, std::cout, std::cerr); }
