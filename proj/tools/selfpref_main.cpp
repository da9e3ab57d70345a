#include "selfpref/cli.hpp"

int main(int argc, char** argv) { return selfpref::cli::run(argc, argv); }
