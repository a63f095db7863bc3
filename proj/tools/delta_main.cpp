#include "delta/cli.hpp"

int main(int argc, char** argv) { return delta::cli::run(argc, argv); }
