#include "helea/cli.hpp"

int main(int argc, char** argv) { return helea::cli::run(argc, argv); }
