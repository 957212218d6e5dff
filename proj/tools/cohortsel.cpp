#include "cohort/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("cohortsel"));
    return cohort::cli::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
