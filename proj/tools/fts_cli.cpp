#include "fts/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fts::run_cli(argc, argv, std::cout, std::cerr); }
