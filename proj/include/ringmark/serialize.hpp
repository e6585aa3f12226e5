#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ringmark/attacks.hpp"
#include "ringmark/metrics.hpp"
#include "ringmark/optimizer.hpp"
#include "ringmark/watermark.hpp"

namespace ringmark {

using json = nlohmann::json;

// Everything a run needs, resolved to concrete values; a fixed config plus
// master seed determines every output byte.
struct RunConfig {
    // model
    int components = 4;
    double sigma0 = 0.7;
    int size = 32;
    double amplitude = 1.0;
    uint64_t model_seed = 0;
    // schedule
    int total_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int sampler_steps = 50;
    // guidance
    GuidanceConfig guidance;
    // watermark
    double coverage = 0.70;
    int t_injection = 240;
    // optimizer
    OptimizerConfig optimizer;
    // attacks
    std::vector<AttackSpec> attacks; // empty -> stock suite
    // metrics
    int images = 200;
    double target_fpr = 0.01;
    std::optional<double> tau;
    int sweep_images = 16;
    int combo_images = 100;
    // run
    std::string output_dir = "out";
    uint64_t seed = 1;
    int workers = 0; // 0 = hardware concurrency
};

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) ok = true;
        if (!ok)
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline AttackSpec attack_from_json(const json& j) {
    detail::reject_unknown_keys(j, {"kind", "params", "seed"}, "attack spec");
    AttackSpec s;
    s.kind = attack_kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("params"))
        for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it)
            s.params[it.key()] = it.value().get<double>();
    if (j.contains("seed")) s.seed = j.at("seed").get<uint64_t>();
    return s;
}

inline json attack_to_json(const AttackSpec& s) {
    json j;
    j["kind"] = attack_kind_name(s.kind);
    j["params"] = json::object();
    for (const auto& [k, v] : s.params) j["params"][k] = v;
    if (s.seed) j["seed"] = *s.seed;
    return j;
}

inline RunConfig config_from_json(const json& j) {
    detail::reject_unknown_keys(j,
                                {"model", "schedule", "guidance", "watermark", "optimizer",
                                 "attacks", "metrics", "output_dir", "seed", "workers"},
                                "config");
    RunConfig c;
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::reject_unknown_keys(m, {"components", "sigma0", "size", "amplitude", "seed"},
                                    "config.model");
        detail::read_if(m, "components", c.components);
        detail::read_if(m, "sigma0", c.sigma0);
        detail::read_if(m, "size", c.size);
        detail::read_if(m, "amplitude", c.amplitude);
        detail::read_if(m, "seed", c.model_seed);
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        detail::reject_unknown_keys(
            s, {"total_steps", "beta_start", "beta_end", "sampler_steps"},
            "config.schedule");
        detail::read_if(s, "total_steps", c.total_steps);
        detail::read_if(s, "beta_start", c.beta_start);
        detail::read_if(s, "beta_end", c.beta_end);
        detail::read_if(s, "sampler_steps", c.sampler_steps);
    }
    if (j.contains("guidance")) {
        const auto& g = j.at("guidance");
        detail::reject_unknown_keys(g, {"eta1", "eta2"}, "config.guidance");
        detail::read_if(g, "eta1", c.guidance.eta1);
        detail::read_if(g, "eta2", c.guidance.eta2);
    }
    if (j.contains("watermark")) {
        const auto& w = j.at("watermark");
        detail::reject_unknown_keys(w, {"coverage", "t_injection"}, "config.watermark");
        detail::read_if(w, "coverage", c.coverage);
        detail::read_if(w, "t_injection", c.t_injection);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        detail::reject_unknown_keys(o,
                                    {"alpha", "beta", "lambda", "lr_wi", "lr_wp", "rounds",
                                     "dataset_size", "t_window", "momentum"},
                                    "config.optimizer");
        detail::read_if(o, "alpha", c.optimizer.ret_weight);
        detail::read_if(o, "beta", c.optimizer.cons_weight);
        detail::read_if(o, "lambda", c.optimizer.norm_weight);
        detail::read_if(o, "lr_wi", c.optimizer.lr_wi);
        detail::read_if(o, "lr_wp", c.optimizer.lr_wp);
        detail::read_if(o, "rounds", c.optimizer.rounds);
        detail::read_if(o, "dataset_size", c.optimizer.dataset_size);
        detail::read_if(o, "momentum", c.optimizer.momentum);
        if (o.contains("t_window")) {
            const auto& tw = o.at("t_window");
            if (!tw.is_array() || tw.size() != 2)
                throw ConfigError("optimizer.t_window must be [lo, hi]");
            c.optimizer.t_window_lo = tw[0].get<int>();
            c.optimizer.t_window_hi = tw[1].get<int>();
        }
    }
    if (j.contains("attacks"))
        for (const auto& a : j.at("attacks")) c.attacks.push_back(attack_from_json(a));
    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        detail::reject_unknown_keys(
            m, {"images", "target_fpr", "tau", "sweep_images", "combo_images"},
            "config.metrics");
        detail::read_if(m, "images", c.images);
        detail::read_if(m, "target_fpr", c.target_fpr);
        detail::read_if(m, "sweep_images", c.sweep_images);
        detail::read_if(m, "combo_images", c.combo_images);
        if (m.contains("tau") && !m.at("tau").is_null())
            c.tau = m.at("tau").get<double>();
    }
    detail::read_if(j, "output_dir", c.output_dir);
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "workers", c.workers);

    if (c.size < 8 || (c.size & (c.size - 1)) != 0)
        throw ConfigError("model.size must be a power of two >= 8");
    if (c.optimizer.t_window_lo >= c.optimizer.t_window_hi ||
        c.optimizer.t_window_lo <= 0 || c.optimizer.t_window_hi >= c.total_steps)
        throw ConfigError("optimizer.t_window must satisfy 0 < lo < hi < T");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

inline json config_to_json(const RunConfig& c) {
    json j;
    j["model"] = {{"components", c.components}, {"sigma0", c.sigma0},
                  {"size", c.size},             {"amplitude", c.amplitude},
                  {"seed", c.model_seed}};
    j["schedule"] = {{"total_steps", c.total_steps},
                     {"beta_start", c.beta_start},
                     {"beta_end", c.beta_end},
                     {"sampler_steps", c.sampler_steps}};
    j["guidance"] = {{"eta1", c.guidance.eta1}, {"eta2", c.guidance.eta2}};
    j["watermark"] = {{"coverage", c.coverage}, {"t_injection", c.t_injection}};
    j["optimizer"] = {{"alpha", c.optimizer.ret_weight},
                      {"beta", c.optimizer.cons_weight},
                      {"lambda", c.optimizer.norm_weight},
                      {"lr_wi", c.optimizer.lr_wi},
                      {"lr_wp", c.optimizer.lr_wp},
                      {"rounds", c.optimizer.rounds},
                      {"dataset_size", c.optimizer.dataset_size},
                      {"t_window", {c.optimizer.t_window_lo, c.optimizer.t_window_hi}},
                      {"momentum", c.optimizer.momentum}};
    j["attacks"] = json::array();
    for (const auto& a : c.attacks) j["attacks"].push_back(attack_to_json(a));
    j["metrics"] = {{"images", c.images},
                    {"target_fpr", c.target_fpr},
                    {"tau", c.tau ? json(*c.tau) : json(nullptr)},
                    {"sweep_images", c.sweep_images},
                    {"combo_images", c.combo_images}};
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    return j;
}

// ---- watermark artifact ----

inline json artifact_to_json(const WatermarkArtifact& a) {
    json j;
    j["format"] = "ringmark-artifact-v1";
    j["mask"] = {{"height", a.pattern.mask.height},
                 {"width", a.pattern.mask.width},
                 {"coverage", a.requested_coverage}};
    j["rings"] = json::array();
    for (const cplx& v : a.pattern.ring_values())
        j["rings"].push_back({v.real(), v.imag()});
    if (a.has_w_p)
        j["w_p"] = {{"logits", a.w_p.logits}, {"bias_coeffs", a.w_p.bias_coeffs}};
    else
        j["w_p"] = nullptr;
    j["t_injection"] = a.t_injection;
    j["guidance"] = {{"eta1", a.guidance.eta1}, {"eta2", a.guidance.eta2}};
    j["schedule_fingerprint"] = a.schedule_fingerprint;
    return j;
}

inline WatermarkArtifact artifact_from_json(const json& j) {
    detail::reject_unknown_keys(
        j, {"format", "mask", "rings", "w_p", "t_injection", "guidance",
            "schedule_fingerprint"},
        "artifact");
    if (j.at("format").get<std::string>() != "ringmark-artifact-v1")
        throw ConfigError("unsupported artifact format");
    WatermarkArtifact a;
    const auto& m = j.at("mask");
    const int h = m.at("height").get<int>();
    const int w = m.at("width").get<int>();
    a.requested_coverage = m.at("coverage").get<double>();

    std::vector<cplx> rings;
    for (const auto& rv : j.at("rings"))
        rings.emplace_back(rv[0].get<double>(), rv[1].get<double>());

    if (rings.empty()) {
        // degenerate artifact: nothing is written, injection is the identity
        a.pattern.mask.height = h;
        a.pattern.mask.width = w;
    } else {
        RingMask mask = build_ring_mask(h, w, a.requested_coverage);
        if (mask.ring_count() != static_cast<int>(rings.size()))
            throw ConfigError("artifact ring count does not match its mask spec");
        a.pattern = WatermarkPattern::from_ring_values(std::move(mask), std::move(rings));
    }
    if (j.contains("w_p") && !j.at("w_p").is_null()) {
        a.has_w_p = true;
        a.w_p.logits = j.at("w_p").at("logits").get<std::vector<double>>();
        a.w_p.bias_coeffs = j.at("w_p").at("bias_coeffs").get<std::vector<double>>();
    }
    a.t_injection = j.at("t_injection").get<int>();
    a.guidance.eta1 = j.at("guidance").at("eta1").get<double>();
    a.guidance.eta2 = j.at("guidance").at("eta2").get<double>();
    a.schedule_fingerprint = j.at("schedule_fingerprint").get<std::string>();
    return a;
}

inline void save_artifact(const std::string& path, const WatermarkArtifact& a) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << artifact_to_json(a).dump(2) << "\n";
    if (!os) throw IoError("write failed: " + path);
}

inline WatermarkArtifact load_artifact(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open artifact: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("artifact parse error in " + path + ": " + e.what());
    }
    return artifact_from_json(j);
}

// ---- CSV writers (deterministic %.17g formatting) ----

inline void write_training_log(const std::string& path,
                               const std::vector<TrainingLogRow>& rows) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "round,t,loss_ret,loss_cons,w_norm,bias_norm,wall_ms\n";
    for (const auto& r : rows)
        os << r.round << "," << r.t << "," << detail::fmt_double(r.loss_ret) << ","
           << detail::fmt_double(r.loss_cons) << "," << detail::fmt_double(r.w_norm)
           << "," << detail::fmt_double(r.bias_norm) << ","
           << detail::fmt_double(r.wall_ms) << "\n";
}

inline void write_detection_csv(const std::string& path, const DetectionReport& rep) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "id,truth,distance,decision\n";
    for (const auto& r : rep.per_image)
        os << r.image_id << "," << (r.watermarked_truth ? 1 : 0) << ","
           << detail::fmt_double(r.distance) << "," << (r.decision ? 1 : 0) << "\n";
}

inline json detection_report_to_json(const DetectionReport& rep) {
    json j;
    j["tau"] = rep.tau;
    j["auc"] = rep.auc;
    j["watermark_mse"] = rep.watermark_mse;
    j["per_image"] = json::array();
    for (const auto& r : rep.per_image)
        j["per_image"].push_back({{"id", r.image_id},
                                  {"truth", r.watermarked_truth},
                                  {"distance", r.distance},
                                  {"decision", r.decision}});
    return j;
}

} // namespace ringmark
