#include "commands.hpp"

int main(int argc, char** argv) { return cage::cli::run(argc, argv); }
