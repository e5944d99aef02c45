#include "autopipe/cli.hpp"

int main(int argc, char** argv) { return autopipe::cli_main(argc, argv); }
