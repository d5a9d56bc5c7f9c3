#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ma_lab_app.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Complex Monge-Ampere lab: solves, sweeps, Gauduchon weights, identity checks, Chern form prescription"};
    app.set_help_flag("-h,--help", "Print this help and exit");

    std::string task, config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    app.add_option("task", task, "solve | sweep | gauduchon | verify-identities | prescribe-ricci | report")
        ->required()
        ->check(CLI::IsMember(ma_lab::kTasks));
    app.add_option("--config", config, "JSON run configuration")->required();
    app.add_option("--seed", seed, "Overrides the config seed");
    app.add_option("--out", out, "Overrides the config output_dir");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        nlohmann::ordered_json err = {{"status", "error"}, {"code", "usage"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n" << app.help();
        return 2;
    }

    cma::configure_threads_from_env();
    std::optional<std::filesystem::path> out_path;
    if (out)
        out_path = *out;
    return ma_lab::run(task, config, seed, out_path, std::cerr);
}
