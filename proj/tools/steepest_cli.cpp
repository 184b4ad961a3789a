#include "steepest/cli.hpp"

int main(int argc, char** argv) { return steepest::cli_main(argc, argv); }
