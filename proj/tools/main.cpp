#include "vide/cli.hpp"

int main(int argc, char** argv) { return vide::cli::run(argc, argv); }
