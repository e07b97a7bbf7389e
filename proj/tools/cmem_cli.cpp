#include <iostream>

#include "cmem/cli.hpp"

int main(int argc, char** argv) { return cmem::main_entry(argc, argv, std::cout, std::cerr); }
