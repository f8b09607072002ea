#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return sosc::cliMain(argc, argv, std::cout, std::cerr); }
