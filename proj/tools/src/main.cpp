#include "cli.hpp"

int main(int argc, char** argv) { return forgepipe::cli::run(argc, argv); }
