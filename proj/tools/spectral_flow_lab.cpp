#include <iostream>

#include "sfl/cli.hpp"

int main(int argc, char** argv) { return sfl::run_cli(argc, argv, std::cout, std::cerr); }
