#include "wosno/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return wosno::cli::run(argc, argv, std::cout, std::cerr); }
