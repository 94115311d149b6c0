#include <iostream>
#include <vector>

#include "egad/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return egad::run_cli(args, std::cout, std::cerr);
}
