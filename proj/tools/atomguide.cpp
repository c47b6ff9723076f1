#include <iostream>

#include "atomguide/cli/run.hpp"

int main(int argc, char** argv) { return atomguide::cli::run(argc, argv, std::cout, std::cerr); }
