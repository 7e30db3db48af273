#include <iostream>

#include "snfseg/cli.hpp"

int main(int argc, char** argv) { return snfseg::cli::run(argc, argv, std::cout, std::cerr); }
