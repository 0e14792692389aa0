#include "fglab/parse.hpp"

#include <iostream>

// placeholder main; subcommands land with the cli module
int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::cout << "fglab: no subcommand given\n";
    return 2;
}
