#include "subcov/cli.hpp"

int main(int argc, char** argv) { return subcov::cli::run(argc, argv); }
