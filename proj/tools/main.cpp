#include "liblearn/cli.hpp"

int main(int argc, char** argv) { return liblearn::cli_main(argc, argv); }
