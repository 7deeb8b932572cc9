#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergolab/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ergolab: chaotic-map statistics, transfer-operator spectra, "
                 "first-return towers, and variance-ratio reports"};

    std::string config_path;
    std::vector<std::string> overrides;
    int workers = -1;
    std::string output_dir;

    app.add_option("config", config_path, "JSON run configuration")->required();
    app.add_option("--set", overrides, "override a config key (key=value, repeatable)");
    app.add_option("--workers", workers, "cap parallel sampling width (results unchanged)");
    app.add_option("--output-dir", output_dir, "override the output directory");

    CLI11_PARSE(app, argc, argv);

    if (workers >= 0) overrides.push_back("workers=" + std::to_string(workers));
    if (!output_dir.empty()) overrides.push_back("output_dir=" + output_dir);

    return ergo::run_cli(config_path, overrides, std::cout, std::cerr);
}
