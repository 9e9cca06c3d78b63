#include "cli_app.hpp"

int main(int argc, char** argv) { return poleloc::run_cli(argc, argv); }
