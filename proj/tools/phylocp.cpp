#include "phylocp/cli.hpp"

int main(int argc, char** argv)
{
  return phylocp::cli::run(argc, argv);
}
