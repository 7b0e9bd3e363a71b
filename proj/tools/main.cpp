#include <iostream>

#include "semrank/cli.hpp"

int main(int argc, char** argv) { return semrank::dispatch(argc, argv, std::cout, std::cerr); }
