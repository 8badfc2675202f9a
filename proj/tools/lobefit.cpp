#include "lobefit/cli.hpp"

int main(int argc, char** argv) { return lobefit::cli_main(argc, argv); }
