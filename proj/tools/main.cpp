#include <iostream>

#include "lrukit/cli.hpp"

int main(int argc, char** argv) { return lrukit::run_cli(argc, argv, std::cout, std::cerr); }
