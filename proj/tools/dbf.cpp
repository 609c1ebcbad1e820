#include "dbf/cli_io.hpp"

int main(int argc, char** argv) { return dbf::run_cli(argc, argv); }
