#include <iostream>

#include "circspline/cli.hpp"

int main(int argc, char** argv) { return circspline::cli_main(argc, argv, std::cout, std::cerr); }
