#include "lipsafe/cli.hpp"

int main(int argc, char** argv) { return lipsafe::cli_main(argc, argv); }
