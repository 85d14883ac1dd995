#include "cli.hpp"

int main(int argc, char** argv) { return isinglsi::cli::run(argc, argv); }
