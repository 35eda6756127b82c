#include <iostream>

#include "graphaug/cli.hpp"

int main(int argc, char** argv) { return graphaug::cli::run(argc, argv, std::cout, std::cerr); }
