#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spdc/commands.hpp"
#include "spdc/numerics/parallel.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Fiber-coupled SPDC photon-pair source model"};
    app.set_version_flag("--version", SPDC_VERSION);
    app.require_subcommand(1);

    spdc::cli::Options opt;
    opt.threads = spdc::default_thread_count();

    auto common = [&](CLI::App* sub, bool with_method) {
        sub->add_option("--config,-c", opt.config_path, "configuration file")->required()->check(CLI::ExistingFile);
        if (with_method) sub->add_option("--method,-m", opt.method, "direct | paraxial | cga | ga | perfect");
        sub->add_flag("--json", opt.json_output, "print machine-readable JSON");
        sub->add_option("--out,-o", opt.out, "output path");
        sub->add_option("--threads,-j", opt.threads, "worker threads (default SPDC_THREADS or 1)")->check(CLI::PositiveNumber);
    };

    auto* angle = app.add_subcommand("angle", "phase-matched opening angle");
    common(angle, false);
    auto* epmf = app.add_subcommand("epmf", "sample Psi (or Theta) on the frequency grid, CSV + JSON sidecar");
    common(epmf, true);
    epmf->add_flag("--theta", opt.theta, "write Theta = Psi / A_p^temp instead of Psi");
    auto* metrics = app.add_subcommand("metrics", "brightness, purity, Schmidt coefficients, validity margins");
    common(metrics, true);
    auto* scan = app.add_subcommand("scan", "parameter scan from the [scan] section");
    common(scan, true);
    scan->add_flag("--resume", opt.resume, "keep rows of an existing output and continue");
    auto* compare = app.add_subcommand("compare", "overlap and brightness ratio between two methods");
    common(compare, true);
    compare->add_option("--method-b", opt.method_b, "second method (default direct)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : spdc::cli::config_error;
    }

    using namespace spdc::cli;
    return guarded([&] {
        if (app.got_subcommand(angle)) return cmd_angle(opt);
        if (app.got_subcommand(epmf)) return cmd_epmf(opt);
        if (app.got_subcommand(metrics)) return cmd_metrics(opt);
        if (app.got_subcommand(scan)) return cmd_scan(opt);
        return cmd_compare(opt);
    });
}
