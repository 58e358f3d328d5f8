#include <iostream>

#include "hitchin/cli_runner.hpp"

int main(int argc, char** argv) { return hitchin::run(argc, argv, std::cout, std::cerr); }
