#include "revflow/cli.hpp"

int main(int argc, char** argv) { return revflow::run_cli(argc, argv); }
