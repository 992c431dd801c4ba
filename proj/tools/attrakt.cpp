#include <iostream>

#include "attrakt/cli.hpp"

int main(int argc, char** argv) { return attrakt::cli::Run(argc, argv, std::cout, std::cerr); }
