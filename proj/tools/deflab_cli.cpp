#include <iostream>

#include "deflab/cli.hpp"

int main(int argc, char** argv) { return deflab::run_cli(argc, argv, std::cout, std::cerr); }
