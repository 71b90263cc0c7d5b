#include "tetris_cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return tetris::cli::run(argc, argv, std::cout, std::cerr);
}
