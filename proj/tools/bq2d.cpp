#include "bq2d/cli.hpp"

int main(int argc, char** argv) { return bq2d::cli_main(argc, argv); }
