#include <iostream>

#include "coret/cli.hpp"

int main(int argc, char** argv) { return coret::cli::dispatch(argc, argv, std::cout, std::cerr); }
