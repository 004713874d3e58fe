#include "cli.hpp"

int main(int argc, char** argv) { return wide::cli::run(argc, argv); }
