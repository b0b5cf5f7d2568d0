#include "cli.hpp"

int main(int argc, char** argv) { return pseudocam::cli::run(argc, argv); }
