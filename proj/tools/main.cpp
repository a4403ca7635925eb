#include "kegcn/cli.hpp"

int main(int argc, char** argv) { return kegcn::cli_main(argc, argv); }
