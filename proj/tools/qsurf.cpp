#include "qsurf/cli.hpp"

int
main(int argc, char** argv)
{
  return qsurf::cli::run(argc, argv);
}
