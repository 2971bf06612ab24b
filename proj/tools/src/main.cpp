#include <iostream>

#include "risisac_cli/cli.hpp"

int main(int argc, char** argv) { return risisac::cli::run(argc, argv, std::cout, std::cerr); }
