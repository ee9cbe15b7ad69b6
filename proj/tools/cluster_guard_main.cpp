#include <string>
#include <vector>

#include "clusterguard/io.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return clusterguard::run_command(args);
}
