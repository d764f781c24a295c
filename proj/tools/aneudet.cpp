#include <iostream>

#include "aneudet/cli.hpp"

int main(int argc, char** argv) { return aneudet::run_cli(argc, argv, std::cout, std::cerr); }
