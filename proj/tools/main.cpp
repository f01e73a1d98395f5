#include "smoothnest/cli.hpp"

int main(int argc, char** argv) { return smoothnest::cli_main(argc, argv); }
