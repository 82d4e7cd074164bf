#include <iostream>

#include "snlb/cli.hpp"

int main(int argc, char** argv) { return snlb::cli_main(argc, argv, std::cout, std::cerr); }
