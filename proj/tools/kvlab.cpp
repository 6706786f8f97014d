// kvlab command line: desk-scale laboratory for the 1D thermoviscoelastic
// Kelvin-Voigt system in its substituted parabolic form.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "kvlab/runner.hpp"

namespace {

std::vector<double> parse_deltas(const std::string& arg) {
    namespace fs = std::filesystem;
    std::string text = arg;
    if (fs::exists(arg) && fs::is_regular_file(arg)) {
        std::ifstream in(arg);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
        for (char& c : text)
            if (c == '\n' || c == '\t' || c == ' ') c = ',';
    }
    std::vector<double> deltas;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t used = 0;
        deltas.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument("bad delta value '" + tok + "'");
    }
    if (deltas.empty()) throw std::invalid_argument("no delta values given");
    return deltas;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"1D thermoviscoelastic Kelvin-Voigt laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string deltas_arg;
    int reps = 1;
    int levels = 4;
    unsigned workers = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "path to a config file")->required();
        sub->add_option("--out", out_dir, "output directory for CSV files");
    };

    CLI::App* validate = app.add_subcommand("validate", "check the material hypotheses");
    add_common(validate);
    CLI::App* certify = app.add_subcommand("certify", "compute the certificate constants");
    add_common(certify);
    CLI::App* runcmd = app.add_subcommand("run", "simulate and emit the trajectory CSV");
    add_common(runcmd);
    CLI::App* sweep = app.add_subcommand("sweep", "run a delta sweep over the Lipschitz knob");
    add_common(sweep);
    sweep->add_option("--deltas", deltas_arg, "comma-separated list or a file of delta values")
        ->required();
    sweep->add_option("--reps", reps, "repetitions per delta value");
    sweep->add_option("--workers", workers, "worker thread cap (0 = hardware)");
    CLI::App* mms = app.add_subcommand("mms", "manufactured-solution convergence study");
    add_common(mms);
    mms->add_option("--levels", levels, "number of grid refinement levels");

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        const kvlab::SimConfig cfg = kvlab::load_config(config_path);
        if (validate->parsed()) return kvlab::cmd_validate(cfg, std::cout, out_dir);
        if (certify->parsed()) return kvlab::cmd_certify(cfg, std::cout, out_dir);
        if (runcmd->parsed()) return kvlab::cmd_run(cfg, std::cout, out_dir).exit_code;
        if (sweep->parsed()) {
            kvlab::SweepSpec spec;
            spec.deltas = parse_deltas(deltas_arg);
            spec.reps = reps;
            return kvlab::cmd_sweep(cfg, spec, std::cout, out_dir, workers);
        }
        if (mms->parsed()) return kvlab::cmd_mms(cfg, levels, std::cout, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
