#include "varcert/cli.hpp"

int main(int argc, char** argv) { return varcert::cli_main(argc, argv); }
