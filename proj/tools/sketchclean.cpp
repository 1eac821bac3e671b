#include "sketchclean/cli.hpp"

int main(int argc, char** argv) { return sketchclean::cli_dispatch(argc, argv); }
