#include <vector>

#include "tavp/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tavp::run_cli(args);
}
