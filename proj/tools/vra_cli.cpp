#include <iostream>

#include "vra/cli.hpp"

int main(int argc, char** argv) { return vra::run_cli(argc, argv, std::cout, std::cerr); }
