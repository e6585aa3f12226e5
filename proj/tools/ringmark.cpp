// ringmark command-line driver: optimize, generate, attack, verify,
// benchmark, sweep, probe. All runs are reproducible from (config, seed).

#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ringmark/ringmark.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string artifact_path;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
    int images = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_artifact) {
    cmd->add_option("--config", a.config_path, "run-config JSON");
    auto* art = cmd->add_option("--artifact", a.artifact_path, "watermark artifact JSON");
    if (needs_artifact) art->required();
    cmd->add_option("--out", a.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", a.seed, "master seed (overrides config)")
        ->each([&a](const std::string&) { a.seed_set = true; });
    cmd->add_option("--workers", a.workers, "worker threads (0 = all cores)");
    cmd->add_option("--images", a.images, "image count (overrides config)");
}

ringmark::RunConfig resolve_config(const CommonArgs& a) {
    ringmark::RunConfig cfg;
    if (!a.config_path.empty()) cfg = ringmark::load_config(a.config_path);
    if (a.seed_set) cfg.seed = a.seed;
    if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
    if (a.workers >= 0) cfg.workers = a.workers;
    if (a.images > 0) cfg.images = a.images;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    using namespace ringmark;
    CLI::App app{"ring-watermark diffusion laboratory"};
    app.require_subcommand(1);

    CommonArgs opt_a, gen_a, atk_a, ver_a, bench_a, sweep_a, probe_a;
    std::vector<std::string> verify_inputs;
    std::string sweep_axis = "both";

    add_common(app.add_subcommand("optimize", "optimize a watermark + hiding signal"),
               opt_a, false);
    add_common(app.add_subcommand("generate", "generate paired clean/watermarked images"),
               gen_a, false);
    add_common(app.add_subcommand("attack", "apply the attack suite to generated images"),
               atk_a, false);
    auto* ver = app.add_subcommand("verify", "verify images against an artifact");
    add_common(ver, ver_a, true);
    ver->add_option("inputs", verify_inputs, "image files (.rgf or .pgm)")->required();
    add_common(app.add_subcommand("benchmark", "attack-suite AUC table"), bench_a, true);
    auto* sw = app.add_subcommand("sweep", "injection-point / coverage sweeps");
    add_common(sw, sweep_a, true);
    sw->add_option("axis", sweep_axis, "injection_step | coverage | both");
    add_common(app.add_subcommand("probe", "noise-term sensitivity probes"), probe_a,
               false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("optimize")) {
            const RunConfig cfg = resolve_config(opt_a);
            Lab lab(cfg);
            cmd_optimize(lab, cfg.output_dir);
            std::cout << "artifact written to " << cfg.output_dir << "/artifact.json\n";
        } else if (app.got_subcommand("generate")) {
            const RunConfig cfg = resolve_config(gen_a);
            Lab lab(cfg);
            std::unique_ptr<WatermarkArtifact> art;
            if (!gen_a.artifact_path.empty())
                art = std::make_unique<WatermarkArtifact>(
                    load_artifact(gen_a.artifact_path));
            cmd_generate(lab, art.get(), cfg.images, cfg.output_dir);
            std::cout << cfg.images << " image pair(s) under " << cfg.output_dir
                      << "/pairs\n";
        } else if (app.got_subcommand("attack")) {
            const RunConfig cfg = resolve_config(atk_a);
            Lab lab(cfg);
            cmd_attack(lab, cfg.output_dir);
            std::cout << "attacked images under " << cfg.output_dir << "/attacked\n";
        } else if (app.got_subcommand("verify")) {
            const RunConfig cfg = resolve_config(ver_a);
            Lab lab(cfg);
            const WatermarkArtifact art = load_artifact(ver_a.artifact_path);
            return cmd_verify(lab, art, verify_inputs, cfg.output_dir);
        } else if (app.got_subcommand("benchmark")) {
            const RunConfig cfg = resolve_config(bench_a);
            Lab lab(cfg);
            const WatermarkArtifact art = load_artifact(bench_a.artifact_path);
            const auto res = cmd_benchmark(lab, art, cfg.output_dir);
            for (const auto& r : res.rows)
                std::cout << r.attack << " auc=" << r.auc
                          << " wm_mse=" << r.watermark_mse << " psnr=" << r.mean_psnr
                          << " ssim=" << r.mean_ssim << "\n";
        } else if (app.got_subcommand("sweep")) {
            const RunConfig cfg = resolve_config(sweep_a);
            Lab lab(cfg);
            const WatermarkArtifact art = load_artifact(sweep_a.artifact_path);
            cmd_sweep(lab, art, sweep_axis, cfg.output_dir);
            std::cout << "sweep CSVs under " << cfg.output_dir << "\n";
        } else if (app.got_subcommand("probe")) {
            const RunConfig cfg = resolve_config(probe_a);
            Lab lab(cfg);
            cmd_probe(lab, cfg.output_dir);
            std::cout << "probe CSVs under " << cfg.output_dir << "\n";
        }
    } catch (const ringmark::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ringmark::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const ringmark::FingerprintMismatch& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 3;
    } catch (const ringmark::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
