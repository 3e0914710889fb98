#include <iostream>

#include "parttransfer/cli/app.hpp"

int main(int argc, char** argv) { return pt::cli::run(argc, argv, std::cout, std::cerr); }
