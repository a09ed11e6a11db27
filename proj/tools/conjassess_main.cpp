#include <iostream>
#include <string>
#include <vector>

#include "conjassess/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return conjassess::cli_main(std::move(args), std::cout, std::cerr);
}
