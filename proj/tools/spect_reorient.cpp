#include "reorient/cli.hpp"

int main(int argc, char** argv) { return reorient::cli::run(argc, argv); }
