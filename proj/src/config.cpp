#include "config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

#include "errors.hpp"

namespace auscult {

using json = nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(Errc::config, where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            fail(Errc::config, where + ": unknown key '" + it.key() + "'");
    }
}

double get_prob(const json& obj, const std::string& where, const std::string& key, double dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(Errc::config, where + "." + key + ": expected a number");
    double p = v.get<double>();
    if (p < 0.0 || p > 1.0) fail(Errc::config, where + "." + key + ": probability out of [0,1]");
    return p;
}

double get_num(const json& obj, const std::string& where, const std::string& key, double dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(Errc::config, where + "." + key + ": expected a number");
    return v.get<double>();
}

size_t get_count(const json& obj, const std::string& where, const std::string& key, size_t dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned()) fail(Errc::config, where + "." + key + ": expected a non-negative integer");
    return v.get<size_t>();
}

std::string get_str(const json& obj, const std::string& where, const std::string& key,
                    const std::string& dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(Errc::config, where + "." + key + ": expected a string");
    return v.get<std::string>();
}

} // namespace

const char* stretch_mode_name(StretchMode m) {
    return m == StretchMode::shared ? "shared" : "independent";
}

StretchMode parse_stretch_mode(const std::string& name) {
    if (name == "shared") return StretchMode::shared;
    if (name == "independent") return StretchMode::independent;
    fail(Errc::config, "stretch_mode must be shared or independent, got '" + name + "'");
}

ToolConfig default_config() { return ToolConfig{}; }

ToolConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io, "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(Errc::format, path.string() + ": " + e.what());
    }

    check_keys(doc, "config", {"version", "augment", "train", "sample"});
    if (!doc.contains("version") || !doc.at("version").is_number_integer())
        fail(Errc::config, "config: missing integer 'version'");
    int version = doc.at("version").get<int>();
    if (version != 1) fail(Errc::config, "config: unsupported version " + std::to_string(version));

    ToolConfig cfg;
    cfg.version = version;

    if (doc.contains("augment")) {
        const json& a = doc.at("augment");
        check_keys(a, "augment",
                   {"pcg_hpss", "pcg_noise", "pcg_stretch", "pcg_am", "pcg_eq", "pcg_ext_noise",
                    "ecg_noise", "ecg_wander", "ecg_stretch", "ecg_eq", "ecg_ext_noise",
                    "stretch_mode", "eq_gain_lo", "eq_gain_hi"});
        AugmentConfig& g = cfg.augment;
        g.pcg_hpss = get_prob(a, "augment", "pcg_hpss", g.pcg_hpss);
        g.pcg_noise = get_prob(a, "augment", "pcg_noise", g.pcg_noise);
        g.pcg_stretch = get_prob(a, "augment", "pcg_stretch", g.pcg_stretch);
        g.pcg_am = get_prob(a, "augment", "pcg_am", g.pcg_am);
        g.pcg_eq = get_prob(a, "augment", "pcg_eq", g.pcg_eq);
        g.pcg_ext_noise = get_prob(a, "augment", "pcg_ext_noise", g.pcg_ext_noise);
        g.ecg_noise = get_prob(a, "augment", "ecg_noise", g.ecg_noise);
        g.ecg_wander = get_prob(a, "augment", "ecg_wander", g.ecg_wander);
        g.ecg_stretch = get_prob(a, "augment", "ecg_stretch", g.ecg_stretch);
        g.ecg_eq = get_prob(a, "augment", "ecg_eq", g.ecg_eq);
        g.ecg_ext_noise = get_prob(a, "augment", "ecg_ext_noise", g.ecg_ext_noise);
        g.stretch_mode = parse_stretch_mode(
            get_str(a, "augment", "stretch_mode", stretch_mode_name(g.stretch_mode)));
        g.eq_gain_lo = get_num(a, "augment", "eq_gain_lo", g.eq_gain_lo);
        g.eq_gain_hi = get_num(a, "augment", "eq_gain_hi", g.eq_gain_hi);
        if (!(g.eq_gain_lo > 0.0) || g.eq_gain_hi < g.eq_gain_lo)
            fail(Errc::config, "augment: eq gain range must satisfy 0 < lo <= hi");
    }

    if (doc.contains("train")) {
        const json& t = doc.at("train");
        check_keys(t, "train",
                   {"preset", "steps", "batch_size", "segment_len", "eval_every", "lr", "loss",
                    "rearrange_probability", "early_stop_fraction"});
        TrainConfig& g = cfg.train;
        g.preset = get_str(t, "train", "preset", g.preset);
        if (g.preset != "diffwave" && g.preset != "wavegrad")
            fail(Errc::config, "train.preset must be diffwave or wavegrad");
        g.steps = get_count(t, "train", "steps", g.steps);
        g.batch_size = get_count(t, "train", "batch_size", g.batch_size);
        if (g.batch_size == 0) fail(Errc::config, "train.batch_size must be positive");
        g.segment_len = get_count(t, "train", "segment_len", g.segment_len);
        if (g.segment_len == 0 || g.segment_len % 256 != 0)
            fail(Errc::config, "train.segment_len must be a positive multiple of 256");
        g.eval_every = get_count(t, "train", "eval_every", g.eval_every);
        if (g.eval_every == 0) fail(Errc::config, "train.eval_every must be positive");
        g.lr = get_num(t, "train", "lr", g.lr);
        if (!(g.lr > 0.0)) fail(Errc::config, "train.lr must be positive");
        std::string loss = get_str(t, "train", "loss", g.norm == LossNorm::l1 ? "l1" : "l2");
        if (loss == "l1") g.norm = LossNorm::l1;
        else if (loss == "l2") g.norm = LossNorm::l2;
        else fail(Errc::config, "train.loss must be l1 or l2");
        g.rearrange_probability =
            get_prob(t, "train", "rearrange_probability", g.rearrange_probability);
        g.early_stop_fraction = get_num(t, "train", "early_stop_fraction", g.early_stop_fraction);
        if (g.early_stop_fraction < 0.0 || g.early_stop_fraction >= 1.0)
            fail(Errc::config, "train.early_stop_fraction must be in [0,1)");
    }

    if (doc.contains("sample")) {
        const json& s = doc.at("sample");
        check_keys(s, "sample", {"stochastic"});
        if (s.contains("stochastic")) {
            if (!s.at("stochastic").is_boolean())
                fail(Errc::config, "sample.stochastic: expected a boolean");
            cfg.sample_stochastic = s.at("stochastic").get<bool>();
        }
    }

    return cfg;
}

std::string config_to_json(const ToolConfig& cfg) {
    json doc;
    doc["version"] = cfg.version;
    const AugmentConfig& g = cfg.augment;
    doc["augment"] = {
        {"pcg_hpss", g.pcg_hpss},
        {"pcg_noise", g.pcg_noise},
        {"pcg_stretch", g.pcg_stretch},
        {"pcg_am", g.pcg_am},
        {"pcg_eq", g.pcg_eq},
        {"pcg_ext_noise", g.pcg_ext_noise},
        {"ecg_noise", g.ecg_noise},
        {"ecg_wander", g.ecg_wander},
        {"ecg_stretch", g.ecg_stretch},
        {"ecg_eq", g.ecg_eq},
        {"ecg_ext_noise", g.ecg_ext_noise},
        {"stretch_mode", stretch_mode_name(g.stretch_mode)},
        {"eq_gain_lo", g.eq_gain_lo},
        {"eq_gain_hi", g.eq_gain_hi},
    };
    const TrainConfig& t = cfg.train;
    doc["train"] = {
        {"preset", t.preset},
        {"steps", t.steps},
        {"batch_size", t.batch_size},
        {"segment_len", t.segment_len},
        {"eval_every", t.eval_every},
        {"lr", t.lr},
        {"loss", t.norm == LossNorm::l1 ? "l1" : "l2"},
        {"rearrange_probability", t.rearrange_probability},
        {"early_stop_fraction", t.early_stop_fraction},
    };
    doc["sample"] = {{"stochastic", cfg.sample_stochastic}};
    return doc.dump(2) + "\n";
}

} // namespace auscult
