#include "curvealign/cli.hpp"

int main(int argc, char** argv) { return curvealign::cli::run(argc, argv); }
