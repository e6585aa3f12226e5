#pragma once

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "ringmark/metrics.hpp"
#include "ringmark/mixture.hpp"
#include "ringmark/optimizer.hpp"
#include "ringmark/parallel.hpp"
#include "ringmark/probe.hpp"
#include "ringmark/serialize.hpp"

namespace ringmark {

// seed-stream ids for the master-seed fan-out
namespace stream {
inline constexpr uint64_t kDataset = 0x01;
inline constexpr uint64_t kOptimizer = 0x02;
inline constexpr uint64_t kImages = 0x1000;        // + image index
inline constexpr uint64_t kAttacks = 0x40000000;   // + row * 2^16 + image
inline constexpr uint64_t kSweep = 0x80000000;     // + point * 2^16 + image
inline constexpr uint64_t kProbe = 0x03;
} // namespace stream

// A fully assembled laboratory: model, schedule and denoiser built from a
// run config. Owns its members; the denoiser references them, so the Lab is
// pinned in place.
struct Lab {
    RunConfig cfg;
    MixtureModel model;
    NoiseSchedule schedule;
    MixtureDenoiser denoiser;

    explicit Lab(RunConfig c)
        : cfg(std::move(c)),
          model(cfg.components, cfg.sigma0, cfg.size, cfg.amplitude),
          schedule(NoiseSchedule::linear(cfg.total_steps, cfg.beta_start, cfg.beta_end,
                                         cfg.sampler_steps)),
          denoiser(model, schedule) {}
    Lab(const Lab&) = delete;
    Lab& operator=(const Lab&) = delete;

    std::vector<AttackSpec> attack_suite() const {
        return cfg.attacks.empty() ? stock_attacks() : cfg.attacks;
    }
};

struct GeneratedPair {
    Grid clean;
    Grid watermarked; // empty when no artifact was supplied
    bool has_watermarked = false;
    int component = 0;
    uint64_t seed = 0;
};

// Paired generation: one seed drives the initial noise and the component
// draw; the clean and watermarked branches share both.
inline GeneratedPair generate_pair(const Lab& lab, const WatermarkArtifact* artifact,
                                   uint64_t seed) {
    Rng rng(seed);
    const Grid noise = rng.normal_grid(lab.cfg.size, lab.cfg.size);
    const int component = static_cast<int>(rng.uniform_index(lab.model.components()));
    const Conditioning cond = lab.model.one_hot(component);
    GeneratedPair out;
    out.component = component;
    out.seed = seed;
    out.clean = sample(lab.denoiser, lab.schedule, noise, &cond,
                       {lab.cfg.guidance.eta1, 0.0});
    if (artifact) {
        SampleOptions opt;
        opt.injection = artifact;
        out.watermarked =
            sample(lab.denoiser, lab.schedule, noise, &cond, lab.cfg.guidance, opt);
        out.has_watermarked = true;
    }
    return out;
}

inline std::vector<GeneratedPair> generate_pairs(const Lab& lab,
                                                 const WatermarkArtifact* artifact,
                                                 int n) {
    std::vector<GeneratedPair> out(n);
    parallel_for(n, lab.cfg.workers, [&](int i) {
        out[i] = generate_pair(lab, artifact,
                               sub_seed(lab.cfg.seed, stream::kImages + i));
    });
    return out;
}

// inversion -> extraction -> L1 distance against the artifact's rings
inline double watermark_distance(const Lab& lab, const WatermarkArtifact& artifact,
                                 const Grid& image) {
    const Grid x_hat = invert(lab.denoiser, lab.schedule, image, artifact.t_injection);
    const auto extracted = extract(x_hat, artifact.pattern.mask);
    return l1_distance(artifact.pattern.ring_values(), extracted, artifact.pattern.mask);
}

struct BenchmarkRow {
    std::string attack;
    double auc = 0.0;
    double watermark_mse = 0.0;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    double tau = 0.0;
    DetectionReport clean_report; // per-image rows of the unattacked pass
};

namespace detail {

struct RowStats {
    std::vector<double> dist_wm, dist_clean, psnrs, ssims;
};

// Attack both populations with identical per-image draws, then verify.
// `row_id` keys the attack randomness so rows are independent but repeatable.
inline RowStats attacked_row(const Lab& lab, const WatermarkArtifact& artifact,
                             const std::vector<GeneratedPair>& pairs,
                             const std::vector<AttackSpec>* single,
                             int combo_k, uint64_t row_id) {
    const int n = static_cast<int>(pairs.size());
    RowStats st;
    st.dist_wm.resize(n);
    st.dist_clean.resize(n);
    st.psnrs.resize(n);
    st.ssims.resize(n);
    AttackContext ctx{&lab.denoiser, &lab.schedule};
    parallel_for(n, lab.cfg.workers, [&](int i) {
        const uint64_t aseed =
            sub_seed(lab.cfg.seed, stream::kAttacks + row_id * 65536 + i);
        std::vector<AttackSpec> specs;
        if (single) {
            specs = *single;
            Rng r(aseed);
            for (auto& s : specs)
                if (s.seed) s.seed = r.next_u64();
        } else {
            specs = sample_attack_combo(combo_k, aseed);
        }
        const Grid wm_u = compose_attacks(to_unit_range(pairs[i].watermarked), specs, ctx);
        const Grid cl_u = compose_attacks(to_unit_range(pairs[i].clean), specs, ctx);
        st.dist_wm[i] = watermark_distance(lab, artifact, from_unit_range(wm_u));
        st.dist_clean[i] = watermark_distance(lab, artifact, from_unit_range(cl_u));
        // harsh combos can saturate both images to the same constant; cap the
        // per-pair PSNR so row means stay finite
        st.psnrs[i] = std::min(psnr(cl_u, wm_u), 99.0);
        st.ssims[i] = ssim(cl_u, wm_u);
    });
    return st;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline BenchmarkRow summarize(const std::string& name, const RowStats& st) {
    return {name, auc(st.dist_wm, st.dist_clean), mean(st.dist_wm), mean(st.psnrs),
            mean(st.ssims)};
}

} // namespace detail

// The robustness table: clean row, identity row, one row per configured
// attack, and composed-attack rows for k = 1..6.
inline BenchmarkResult run_benchmark(const Lab& lab, const WatermarkArtifact& artifact) {
    if (artifact.schedule_fingerprint != lab.schedule.fingerprint())
        throw FingerprintMismatch("artifact does not match the configured schedule");
    BenchmarkResult res;
    const int n = lab.cfg.images;
    const auto pairs = generate_pairs(lab, &artifact, n);

    // clean row; also calibrates tau
    detail::RowStats clean_st;
    clean_st.dist_wm.resize(n);
    clean_st.dist_clean.resize(n);
    clean_st.psnrs.resize(n);
    clean_st.ssims.resize(n);
    parallel_for(n, lab.cfg.workers, [&](int i) {
        clean_st.dist_wm[i] = watermark_distance(lab, artifact, pairs[i].watermarked);
        clean_st.dist_clean[i] = watermark_distance(lab, artifact, pairs[i].clean);
        clean_st.psnrs[i] = std::min(
            psnr(to_unit_range(pairs[i].clean), to_unit_range(pairs[i].watermarked)),
            99.0);
        clean_st.ssims[i] =
            ssim(to_unit_range(pairs[i].clean), to_unit_range(pairs[i].watermarked));
    });
    res.tau = lab.cfg.tau ? *lab.cfg.tau
                          : calibrate_threshold(clean_st.dist_clean, lab.cfg.target_fpr);
    res.rows.push_back(detail::summarize("clean", clean_st));

    res.clean_report.tau = res.tau;
    res.clean_report.auc = res.rows[0].auc;
    res.clean_report.watermark_mse = res.rows[0].watermark_mse;
    for (int i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "wm_%04d", i);
        res.clean_report.per_image.push_back(
            {id, clean_st.dist_wm[i], true, clean_st.dist_wm[i] <= res.tau});
    }
    for (int i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "clean_%04d", i);
        res.clean_report.per_image.push_back(
            {id, clean_st.dist_clean[i], false, clean_st.dist_clean[i] <= res.tau});
    }

    uint64_t row_id = 1;
    {
        std::vector<AttackSpec> ident{{AttackKind::identity, {}, {}}};
        res.rows.push_back(detail::summarize(
            "identity", detail::attacked_row(lab, artifact, pairs, &ident, 0, row_id++)));
    }
    for (const auto& spec : lab.attack_suite()) {
        std::vector<AttackSpec> one{spec};
        res.rows.push_back(detail::summarize(
            spec.label(), detail::attacked_row(lab, artifact, pairs, &one, 0, row_id++)));
    }
    const int n_combo = std::min(lab.cfg.combo_images, n);
    const std::vector<GeneratedPair> combo_pairs(pairs.begin(), pairs.begin() + n_combo);
    for (int k = 1; k <= 6; ++k) {
        res.rows.push_back(detail::summarize(
            "combo_" + std::to_string(k),
            detail::attacked_row(lab, artifact, combo_pairs, nullptr, k, row_id++)));
    }
    return res;
}

struct SweepRow {
    double value = 0.0;
    double auc = 0.0;
    double watermark_mse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

// Injection-point sweep over the full ladder interior: the artifact's rings
// and hiding signal are re-implanted at each timestep.
inline std::vector<SweepRow> run_sweep_injection(const Lab& lab,
                                                 const WatermarkArtifact& artifact) {
    std::vector<int> points;
    for (int t : lab.schedule.ladder())
        if (t != lab.schedule.total_steps() && t != 0) points.push_back(t);

    std::vector<SweepRow> rows(points.size());
    const int n = lab.cfg.sweep_images;
    for (size_t p = 0; p < points.size(); ++p) {
        WatermarkArtifact a = artifact;
        a.t_injection = points[p];
        std::vector<double> dw(n), dc(n), ps(n), ss(n);
        parallel_for(n, lab.cfg.workers, [&](int i) {
            const auto pair = generate_pair(
                lab, &a, sub_seed(lab.cfg.seed, stream::kSweep + p * 65536 + i));
            dw[i] = watermark_distance(lab, a, pair.watermarked);
            dc[i] = watermark_distance(lab, a, pair.clean);
            ps[i] = psnr(to_unit_range(pair.clean), to_unit_range(pair.watermarked));
            ss[i] = ssim(to_unit_range(pair.clean), to_unit_range(pair.watermarked));
        });
        rows[p] = {static_cast<double>(points[p]), auc(dw, dc), detail::mean(dw),
                   detail::mean(ps), detail::mean(ss)};
    }
    return rows;
}

// Coverage sweep: fresh masks at each fraction carrying random ring values
// matched to the artifact's per-bin energy density, with the artifact's
// hiding signal and injection point.
inline std::vector<SweepRow> run_sweep_coverage(const Lab& lab,
                                                const WatermarkArtifact& artifact) {
    const std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    const double ref_density =
        watermark_norm(artifact.pattern) /
        std::sqrt(static_cast<double>(artifact.pattern.mask.total_bins()));

    std::vector<SweepRow> rows(fractions.size());
    const int n = lab.cfg.sweep_images;
    for (size_t p = 0; p < fractions.size(); ++p) {
        RingMask mask = build_ring_mask(lab.cfg.size, lab.cfg.size, fractions[p]);
        Rng rng(sub_seed(lab.cfg.seed, stream::kSweep + 0xC0000 + p));
        std::vector<cplx> ring_values(mask.ring_count());
        for (auto& v : ring_values) v = cplx(rng.normal(), rng.normal());
        WatermarkArtifact a = artifact;
        a.requested_coverage = fractions[p];
        a.pattern = WatermarkPattern::from_ring_values(std::move(mask), ring_values);
        const double density =
            watermark_norm(a.pattern) /
            std::sqrt(static_cast<double>(a.pattern.mask.total_bins()));
        for (auto& v : a.pattern.bin_values) v *= ref_density / density;

        std::vector<double> dw(n), dc(n), ps(n), ss(n);
        parallel_for(n, lab.cfg.workers, [&](int i) {
            const auto pair = generate_pair(
                lab, &a, sub_seed(lab.cfg.seed, stream::kSweep + (p + 64) * 65536 + i));
            dw[i] = watermark_distance(lab, a, pair.watermarked);
            dc[i] = watermark_distance(lab, a, pair.clean);
            ps[i] = psnr(to_unit_range(pair.clean), to_unit_range(pair.watermarked));
            ss[i] = ssim(to_unit_range(pair.clean), to_unit_range(pair.watermarked));
        });
        rows[p] = {fractions[p], auc(dw, dc), detail::mean(dw), detail::mean(ps),
                   detail::mean(ss)};
    }
    return rows;
}

// ---- file emission ----

inline void write_benchmark_csv(const std::string& path, const BenchmarkResult& res) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "attack,auc,watermark_mse,mean_psnr,mean_ssim\n";
    for (const auto& r : res.rows)
        os << r.attack << "," << detail::fmt_double(r.auc) << ","
           << detail::fmt_double(r.watermark_mse) << ","
           << detail::fmt_double(r.mean_psnr) << "," << detail::fmt_double(r.mean_ssim)
           << "\n";
}

inline void write_benchmark_json(const std::string& path, const BenchmarkResult& res) {
    json j;
    j["tau"] = res.tau;
    j["rows"] = json::array();
    for (const auto& r : res.rows)
        j["rows"].push_back({{"attack", r.attack},
                             {"auc", r.auc},
                             {"watermark_mse", r.watermark_mse},
                             {"mean_psnr", r.mean_psnr},
                             {"mean_ssim", r.mean_ssim}});
    j["clean_report"] = detection_report_to_json(res.clean_report);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << j.dump(2) << "\n";
}

inline void write_sweep_csv(const std::string& path, const std::string& axis,
                            const std::vector<SweepRow>& rows) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << axis << ",auc,watermark_mse,psnr,ssim\n";
    for (const auto& r : rows)
        os << detail::fmt_double(r.value) << "," << detail::fmt_double(r.auc) << ","
           << detail::fmt_double(r.watermark_mse) << "," << detail::fmt_double(r.psnr)
           << "," << detail::fmt_double(r.ssim) << "\n";
}

inline void write_probe_curves_csv(const std::string& path,
                                   const std::vector<NoiseTermRow>& rows) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "# aggregation: mean absolute value over the grid, averaged over seeds\n";
    os << "t,uncond,cond,guidance,full\n";
    for (const auto& r : rows)
        os << r.t << "," << detail::fmt_double(r.uncond) << ","
           << detail::fmt_double(r.cond) << "," << detail::fmt_double(r.guidance) << ","
           << detail::fmt_double(r.full) << "\n";
}

inline void write_probe_response_csv(const std::string& path,
                                     const std::vector<PerturbationResponse>& rows) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "t_perturb,delta_uncond,delta_guidance\n";
    for (const auto& r : rows)
        os << r.t_perturb << "," << detail::fmt_double(r.delta_uncond) << ","
           << detail::fmt_double(r.delta_guidance) << "\n";
}

// ---- commands (shared by the CLI and the tests) ----

inline WatermarkArtifact cmd_optimize(const Lab& lab, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto dataset = lab.model.sample_dataset(
        lab.cfg.optimizer.dataset_size,
        sub_seed(lab.cfg.seed ^ lab.cfg.model_seed, stream::kDataset));
    const RingMask mask = build_ring_mask(lab.cfg.size, lab.cfg.size, lab.cfg.coverage);
    auto res = optimize(lab.model, lab.schedule, dataset, mask, lab.cfg.optimizer,
                        lab.cfg.guidance, lab.cfg.t_injection,
                        sub_seed(lab.cfg.seed, stream::kOptimizer));
    res.artifact.requested_coverage = lab.cfg.coverage;
    save_artifact(out_dir + "/artifact.json", res.artifact);
    write_training_log(out_dir + "/training_log.csv", res.log);
    return res.artifact;
}

inline void cmd_generate(const Lab& lab, const WatermarkArtifact* artifact, int n,
                         const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir + "/pairs");
    const auto pairs = generate_pairs(lab, artifact, n);
    json meta;
    meta["images"] = json::array();
    for (int i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "clean_%04d", i);
        write_rgf(out_dir + "/pairs/" + name + ".rgf", pairs[i].clean);
        write_pnm(out_dir + "/pairs/" + name + ".pgm", to_unit_range(pairs[i].clean));
        json entry{{"id", i},
                   {"seed", pairs[i].seed},
                   {"component", pairs[i].component},
                   {"clean", std::string(name) + ".rgf"}};
        if (pairs[i].has_watermarked) {
            std::snprintf(name, sizeof name, "wm_%04d", i);
            write_rgf(out_dir + "/pairs/" + name + ".rgf", pairs[i].watermarked);
            write_pnm(out_dir + "/pairs/" + name + ".pgm",
                      to_unit_range(pairs[i].watermarked));
            entry["watermarked"] = std::string(name) + ".rgf";
        }
        meta["images"].push_back(entry);
    }
    std::ofstream os(out_dir + "/pairs/metadata.json");
    if (!os) throw IoError("cannot write metadata.json");
    os << meta.dump(2) << "\n";
}

inline void cmd_attack(const Lab& lab, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const std::string in_dir = out_dir + "/pairs";
    if (!fs::exists(in_dir)) throw IoError("no pairs/ directory under " + out_dir +
                                           "; run generate first");
    AttackContext ctx{&lab.denoiser, &lab.schedule};
    const auto suite = lab.attack_suite();
    std::vector<std::string> inputs;
    for (const auto& e : fs::directory_iterator(in_dir))
        if (e.path().extension() == ".rgf") inputs.push_back(e.path().string());
    std::sort(inputs.begin(), inputs.end());
    uint64_t file_idx = 0;
    for (const auto& path : inputs) {
        const Grid img = read_rgf(path);
        const std::string stem = fs::path(path).stem().string();
        uint64_t spec_idx = 0;
        for (AttackSpec spec : suite) {
            if (spec.seed)
                spec.seed = sub_seed(lab.cfg.seed,
                                     stream::kAttacks + file_idx * 256 + spec_idx);
            const std::string dir = out_dir + "/attacked/" + spec.label();
            fs::create_directories(dir);
            const Grid attacked = apply_attack(to_unit_range(img), spec, ctx);
            write_rgf(dir + "/" + stem + ".rgf", from_unit_range(attacked));
            write_pnm(dir + "/" + stem + ".pgm", attacked);
            ++spec_idx;
        }
        ++file_idx;
    }
}

inline int cmd_verify(const Lab& lab, const WatermarkArtifact& artifact,
                      const std::vector<std::string>& image_paths,
                      const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (image_paths.empty()) throw ConfigError("verify: no input images");
    if (artifact.schedule_fingerprint != lab.schedule.fingerprint())
        throw FingerprintMismatch("artifact does not match the configured schedule");
    const bool have_tau = lab.cfg.tau.has_value();
    json report;
    report["tau"] = have_tau ? json(*lab.cfg.tau) : json(nullptr);
    report["images"] = json::array();
    for (const auto& path : image_paths) {
        Grid img = fs::path(path).extension() == ".rgf"
                       ? read_rgf(path)
                       : from_unit_range(read_pnm(path));
        const double d = watermark_distance(lab, artifact, img);
        json row{{"path", path}, {"distance", d}};
        if (have_tau) row["decision"] = d <= *lab.cfg.tau;
        report["images"].push_back(row);
        std::cout << path << " distance=" << d;
        if (have_tau) std::cout << " watermarked=" << (d <= *lab.cfg.tau ? "yes" : "no");
        std::cout << "\n";
    }
    fs::create_directories(out_dir);
    std::ofstream os(out_dir + "/verify.json");
    os << report.dump(2) << "\n";
    return 0;
}

inline BenchmarkResult cmd_benchmark(const Lab& lab, const WatermarkArtifact& artifact,
                                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    BenchmarkResult res = run_benchmark(lab, artifact);
    write_benchmark_csv(out_dir + "/benchmark.csv", res);
    write_benchmark_json(out_dir + "/benchmark.json", res);
    write_detection_csv(out_dir + "/per_image.csv", res.clean_report);
    return res;
}

inline void cmd_sweep(const Lab& lab, const WatermarkArtifact& artifact,
                      const std::string& axis, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    if (axis == "injection_step" || axis == "both")
        write_sweep_csv(out_dir + "/sweep_injection_step.csv", "t_injection",
                        run_sweep_injection(lab, artifact));
    if (axis == "coverage" || axis == "both")
        write_sweep_csv(out_dir + "/sweep_coverage.csv", "coverage",
                        run_sweep_coverage(lab, artifact));
    if (axis != "injection_step" && axis != "coverage" && axis != "both")
        throw ConfigError("sweep axis must be injection_step or coverage");
}

inline void cmd_probe(const Lab& lab, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const Conditioning cond = lab.model.one_hot(0);
    const auto curves =
        noise_term_curves(lab.denoiser, lab.schedule, lab.cfg.size, cond,
                          lab.cfg.guidance.eta1, 4, sub_seed(lab.cfg.seed, stream::kProbe));
    write_probe_curves_csv(out_dir + "/probe_curves.csv", curves);

    const RingMask mask = build_ring_mask(lab.cfg.size, lab.cfg.size, lab.cfg.coverage);
    std::vector<int> points{0};
    for (int t : lab.schedule.ladder())
        if (t != lab.schedule.total_steps() && t != 0) points.push_back(t);
    std::sort(points.begin(), points.end());
    std::vector<PerturbationResponse> rows(points.size());
    parallel_for(static_cast<int>(points.size()), lab.cfg.workers, [&](int i) {
        rows[i] = perturbation_response(lab.denoiser, lab.schedule, cond,
                                        lab.cfg.guidance.eta1, points[i], mask, 1.0,
                                        sub_seed(lab.cfg.seed, stream::kProbe + 1));
    });
    write_probe_response_csv(out_dir + "/probe_response.csv", rows);
}

} // namespace ringmark
