#include <iostream>

#include "cogweb/cli/cli.hpp"

int main(int argc, char** argv) { return cogweb::cli::dispatch(argc, argv, std::cout, std::cerr); }
