#include <iostream>

#include "optomech/cli.hpp"

int main(int argc, char **argv) { return optomech::cli::run(argc, argv, std::cout, std::cerr); }
