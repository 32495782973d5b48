#include "heterformer/cli/commands.hpp"

int main(int argc, char** argv) { return heterformer::cli::run(argc, argv); }
