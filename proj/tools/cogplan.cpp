#include "cogplan/cli.hpp"

int main(int argc, char** argv) { return cogplan::cli_entry(argc, argv); }
