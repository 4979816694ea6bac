#include <iostream>

#include "sldg/cli.hpp"

int main(int argc, char** argv) { return sldg::run_cli(argc, argv, std::cout, std::cerr); }
