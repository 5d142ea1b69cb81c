#include "fieldpipe_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fieldpipe::cli::main(argc, argv, std::cout); }
