// Command-line front end.  Everything goes through the shared C API so the
// binary exercises the same surface other language bindings would.

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "auscult.h"

namespace {

int report(auscult_status st) {
    if (st == AUSCULT_OK) return 0;
    std::fprintf(stderr, "error: %s\n", auscult_last_error());
    return static_cast<int>(st);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"auscult: cardiac audio augmentation toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // lets --seed appear after the subcommand name

    uint64_t seed = 0;
    app.add_option("--seed", seed, "random seed (AUSCULT_SEED)")
        ->envname("AUSCULT_SEED");

    // fixtures
    auto* fx = app.add_subcommand("fixtures", "synthesize a paired test corpus");
    std::string fx_out;
    size_t fx_count = 16;
    double fx_rate = 0.0;
    bool fx_no_noise = false;
    fx->add_option("--out", fx_out, "output directory")->required();
    fx->add_option("--count", fx_count, "number of records");
    fx->add_option("--rate", fx_rate, "sample rate in Hz (default 2000)");
    fx->add_flag("--no-noise", fx_no_noise, "skip the noise bank");

    // augment
    auto* aug = app.add_subcommand("augment", "augment every record in a manifest");
    std::string aug_manifest, aug_out, aug_noise, aug_config;
    size_t aug_copies = 1, aug_fragments = 0;
    double aug_fragment_seconds = 0.0;
    aug->add_option("--manifest", aug_manifest, "manifest CSV")->required();
    aug->add_option("--out", aug_out, "output directory")->required();
    aug->add_option("--noise", aug_noise, "noise bank directory");
    aug->add_option("--config", aug_config, "JSON config file");
    aug->add_option("--copies", aug_copies, "augmented copies per record");
    aug->add_option("--fragment-seconds", aug_fragment_seconds, "fragment length in seconds");
    aug->add_option("--fragments", aug_fragments, "evenly spaced fragments per copy");

    // hpss
    auto* hp = app.add_subcommand("hpss", "harmonic/percussive tool");
    std::string hp_in, hp_out;
    bool hp_split = false;
    size_t hp_window = 1024, hp_hop = 128, hp_median = 15;
    double hp_lambda = 1.5;
    hp->add_option("--in", hp_in, "input WAV")->required();
    hp->add_option("--out", hp_out, "output WAV (split mode: stem for _h/_p)")->required();
    hp->add_flag("--split", hp_split, "deterministic split instead of augmentation");
    hp->add_option("--window", hp_window, "split: window length");
    hp->add_option("--hop", hp_hop, "split: hop length");
    hp->add_option("--lambda", hp_lambda, "split: mask threshold");
    hp->add_option("--median", hp_median, "split: median half-width");

    // rearrange
    auto* re = app.add_subcommand("rearrange", "shuffle cardiac cycles");
    std::string re_in, re_cycles, re_out, re_cycles_out, re_mode;
    double re_prob = 0.75;
    std::map<std::string, int> mode_names{{"half", 0}, {"random", 1}, {"every", 2}};
    re->add_option("--in", re_in, "input WAV")->required();
    re->add_option("--cycles", re_cycles, "cycle boundary CSV")->required();
    re->add_option("--out", re_out, "output WAV")->required();
    re->add_option("--cycles-out", re_cycles_out, "output boundary CSV");
    re->add_option("--mode", re_mode, "force a mode: half | random | every")
        ->check(CLI::IsMember({"half", "random", "every"}));
    re->add_option("--probability", re_prob, "gate probability when no mode is forced");

    // ddpm-train
    auto* tr = app.add_subcommand("ddpm-train", "train the toy conditional denoiser");
    std::string tr_manifest, tr_out, tr_config;
    tr->add_option("--manifest", tr_manifest, "manifest CSV")->required();
    tr->add_option("--out", tr_out, "checkpoint output path")->required();
    tr->add_option("--config", tr_config, "JSON config file");

    // ddpm-sample
    auto* sa = app.add_subcommand("ddpm-sample", "sample a PCG conditioned on an ECG");
    std::string sa_ckpt, sa_ecg, sa_out, sa_label = "normal";
    bool sa_deterministic = false;
    sa->add_option("--checkpoint", sa_ckpt, "trained checkpoint")->required();
    sa->add_option("--ecg", sa_ecg, "conditioning ECG WAV")->required();
    sa->add_option("--out", sa_out, "output WAV")->required();
    sa->add_option("--label", sa_label, "normal | abnormal | unsure")
        ->check(CLI::IsMember({"normal", "abnormal", "unsure"}));
    sa->add_flag("--deterministic", sa_deterministic, "suppress sampling noise");

    // metrics
    auto* me = app.add_subcommand("metrics", "classification rate table");
    std::string me_pred, me_labels;
    double me_threshold = 0.5;
    bool me_json = false;
    uint64_t me_tp = 0, me_fn = 0, me_fp = 0, me_tn = 0;
    auto* me_pred_opt = me->add_option("--predictions", me_pred, "fragment score CSV");
    me->add_option("--labels", me_labels, "subject label CSV")->needs(me_pred_opt);
    me->add_option("--threshold", me_threshold, "positive decision threshold");
    auto* me_tp_opt = me->add_option("--tp", me_tp, "true positives");
    me->add_option("--fn", me_fn, "false negatives")->needs(me_tp_opt);
    me->add_option("--fp", me_fp, "false positives")->needs(me_tp_opt);
    me->add_option("--tn", me_tn, "true negatives")->needs(me_tp_opt);
    me->add_flag("--json", me_json, "JSON output");
    me_pred_opt->excludes(me_tp_opt);

    CLI11_PARSE(app, argc, argv);

    if (fx->parsed()) {
        return report(auscult_make_fixtures(fx_out.c_str(), fx_count, fx_rate,
                                            fx_no_noise ? 0 : 1, seed));
    }

    if (aug->parsed()) {
        size_t records = 0, copies = 0, fragments = 0;
        auscult_status st = auscult_run_augment(
            aug_manifest.c_str(), aug_out.c_str(), aug_noise.empty() ? nullptr : aug_noise.c_str(),
            aug_config.empty() ? nullptr : aug_config.c_str(), seed, aug_copies,
            aug_fragment_seconds, aug_fragments, &records, &copies, &fragments);
        if (st == AUSCULT_OK)
            std::printf("augmented %zu records, %zu copies, %zu fragments\n", records, copies,
                        fragments);
        return report(st);
    }

    if (hp->parsed()) {
        int passed = 0;
        auscult_status st =
            auscult_run_hpss_file(hp_in.c_str(), hp_out.c_str(), seed, hp_split ? 1 : 0,
                                  hp_window, hp_hop, hp_lambda, hp_median, &passed);
        if (st == AUSCULT_OK && passed) std::printf("input shorter than drawn window; passed through\n");
        return report(st);
    }

    if (re->parsed()) {
        int rearranged = 0;
        int mode = re_mode.empty() ? -1 : mode_names.at(re_mode);
        auscult_status st = auscult_run_rearrange_file(
            re_in.c_str(), re_cycles.c_str(), re_out.c_str(),
            re_cycles_out.empty() ? nullptr : re_cycles_out.c_str(), seed, mode, re_prob,
            &rearranged);
        if (st == AUSCULT_OK)
            std::printf("%s\n", rearranged ? "rearranged" : "unchanged");
        return report(st);
    }

    if (tr->parsed()) {
        size_t steps = 0, used = 0;
        double initial = 0.0, best = 0.0;
        auscult_status st = auscult_run_ddpm_train(tr_manifest.c_str(), tr_out.c_str(),
                                                   tr_config.empty() ? nullptr : tr_config.c_str(),
                                                   seed, &steps, &initial, &best, &used);
        if (st == AUSCULT_OK)
            std::printf("trained on %zu records, %zu steps, val %.6f -> %.6f\n", used, steps,
                        initial, best);
        return report(st);
    }

    if (sa->parsed()) {
        int label = sa_label == "normal" ? 0 : sa_label == "abnormal" ? 1 : 2;
        return report(auscult_run_ddpm_sample(sa_ckpt.c_str(), sa_ecg.c_str(), sa_out.c_str(),
                                              label, seed, sa_deterministic ? 0 : 1));
    }

    if (me->parsed()) {
        std::vector<char> buf(1 << 16);
        auscult_status st;
        if (!me_pred.empty()) {
            if (me_labels.empty()) {
                std::fprintf(stderr, "error: --predictions requires --labels\n");
                return static_cast<int>(AUSCULT_E_INVALID_ARGUMENT);
            }
            st = auscult_run_metrics_files(me_pred.c_str(), me_labels.c_str(), me_threshold,
                                           me_json ? 1 : 0, buf.data(), buf.size());
        } else if (me_tp_opt->count() || me_fn || me_fp || me_tn) {
            auscult_confusion cm{me_tp, me_fn, me_fp, me_tn};
            st = me_json ? auscult_metrics_json(&cm, buf.data(), buf.size())
                         : auscult_metrics_text(&cm, buf.data(), buf.size());
        } else {
            std::fprintf(stderr, "error: give --predictions/--labels or --tp/--fn/--fp/--tn\n");
            return static_cast<int>(AUSCULT_E_INVALID_ARGUMENT);
        }
        if (st == AUSCULT_OK) std::fputs(buf.data(), stdout);
        return report(st);
    }

    return 0;
}
