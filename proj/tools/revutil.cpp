#include <revutil/cli.hpp>

int main(int argc, char** argv)
{
    return revutil::cli::run_cli(argc, argv);
}
