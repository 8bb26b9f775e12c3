#include <iostream>

#include "pcls/cli.hpp"

int main(int argc, char** argv) { return pcls::run_cli(argc, argv, std::cout, std::cerr); }
