#include "comet/cli.hpp"

int main(int argc, char** argv) { return comet::cli_main(argc, argv); }
