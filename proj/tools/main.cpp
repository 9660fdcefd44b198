#include "mmls/cli.hpp"

int main(int argc, char** argv) { return mmls::cli::run(argc, argv); }
