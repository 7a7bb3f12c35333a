#include "dreamhone/cli.hpp"

int main(int argc, char** argv) { return dreamhone::cli_dispatch(argc, argv); }
