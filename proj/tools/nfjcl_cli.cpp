#include "nfjcl/cli.hpp"

int main(int argc, char** argv) { return nfjcl::cli_main(argc, argv); }
