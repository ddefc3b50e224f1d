#include <iostream>

#include "zakai/cli.hpp"

int main(int argc, char** argv) { return zakai::run_cli(argc, argv, std::cout, std::cerr); }
