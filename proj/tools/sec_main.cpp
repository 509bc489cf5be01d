#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sec/datagen.hpp"
#include "sec/gradcheck.hpp"
#include "sec/harness.hpp"
#include "sec/io.hpp"
#include "sec/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 verification failure, 2 usage/config error,
// 3 numerical abort.
constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string pad_id(int id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", id);
    return buf;
}

sec::RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return sec::RunConfig::toy();
    return sec::load_run_config(path);
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream os(path);
    if (!os) throw sec::IoError("cannot write: " + path.string());
    os << doc.dump(2) << "\n";
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, int count) {
    sec::RunConfig cfg = load_config_or_default(config_path);
    sec::GenerateStats stats;
    auto samples = sec::generate(cfg.synth, count, &stats);
    sec::export_samples(samples, out_dir);
    if (stats.regenerated > 0)
        std::cerr << "note: regenerated " << stats.regenerated
                  << " samples after failed shape placement\n";
    std::cout << "wrote " << samples.size() << " samples to " << out_dir << "\n";
    return kExitOk;
}

int cmd_cues(const std::string& data_dir, const std::string& out_dir, double fg_ratio,
             double bg_fraction, int stride) {
    if (fg_ratio <= 0.0 || fg_ratio >= 1.0)
        throw sec::ConfigError("--fg-ratio must be in (0,1)");
    if (bg_fraction <= 0.0 || bg_fraction >= 1.0)
        throw sec::ConfigError("--bg-fraction must be in (0,1)");
    sec::DatasetManifest manifest = sec::read_manifest(data_dir);
    fs::create_directories(out_dir);
    for (const auto& entry : manifest.entries) {
        sec::SynthSample sample = sec::load_sample(entry);
        for (int c : entry.labels.present)
            if (!sample.heatmaps.count(c))
                throw sec::IoError("missing heatmap for class " + std::to_string(c) +
                                   " in sample " + pad_id(entry.id));
        sec::CueMask cues = sec::make_cue_mask(sample, stride, fg_ratio, bg_fraction);
        sec::write_cue_pgm(fs::path(out_dir) / (pad_id(entry.id) + ".pgm"), cues);
    }
    std::cout << "wrote " << manifest.entries.size() << " cue masks to " << out_dir << "\n";
    return kExitOk;
}

sec::TermMask parse_terms(const std::string& spec) {
    sec::TermMask terms{false, false, false};
    std::string s = spec;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t comma = s.find(',', pos);
        std::string term = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (term == "seed")
            terms.seed = true;
        else if (term == "expand")
            terms.expand = true;
        else if (term == "constrain")
            terms.constrain = true;
        else if (!term.empty())
            throw sec::ConfigError("unknown loss term \"" + term + "\"");
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return terms;
}

int cmd_train(const std::string& data_dir, const std::string& cues_dir,
              const std::string& config_path, const std::string& out_ckpt,
              const std::string& terms, const std::string& pooling) {
    sec::RunConfig cfg = load_config_or_default(config_path);
    if (!terms.empty()) cfg.train.terms = parse_terms(terms);
    if (!pooling.empty()) {
        cfg.train.pooling = sec::pooling_mode_from_string(pooling);
        if (cfg.train.pooling != sec::PoolingMode::Gwrp)
            std::cerr << "note: --pooling " << pooling
                      << " overrides d_plus; the configured decay value is ignored\n";
    }

    auto samples = sec::load_train_samples(data_dir, cues_dir);
    auto [params, log] = sec::train(samples, cfg.net, cfg.train);

    sec::save_checkpoint(out_ckpt, cfg.net, params);
    std::ofstream os(fs::path(out_ckpt) / "train_log.jsonl");
    if (!os) throw sec::IoError("cannot write training log");
    for (const auto& r : log.records) {
        json line = {{"iteration", r.iteration},   {"lr", r.lr},
                     {"seed_loss", r.seed_loss},   {"expand_loss", r.expand_loss},
                     {"constrain_loss", r.constrain_loss}, {"total", r.total}};
        os << line.dump() << "\n";
    }
    std::cout << "checkpoint written to " << out_ckpt << "\n";
    return kExitOk;
}

int cmd_infer(const std::string& ckpt, const std::string& image_path,
              const std::string& out_mask, const std::string& crf,
              const std::string& config_path) {
    if (crf != "on" && crf != "off") throw sec::ConfigError("--crf must be on or off");
    sec::RunConfig cfg = load_config_or_default(config_path);
    auto [net_config, params] = sec::load_checkpoint(ckpt);
    sec::Image image = sec::read_ppm(image_path);
    sec::SegMask mask =
        sec::infer_mask(net_config, params, image, cfg.infer_crf, crf == "on");
    sec::write_pgm(out_mask, mask);
    return kExitOk;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& out_path, int classes) {
    std::vector<fs::path> preds;
    for (const auto& e : fs::directory_iterator(pred_dir))
        if (e.path().extension() == ".pgm") preds.push_back(e.path());
    std::sort(preds.begin(), preds.end());
    if (preds.empty()) throw sec::IoError("no .pgm predictions in " + pred_dir);

    std::vector<sec::ConfusionCounts> counts;
    for (const auto& p : preds) {
        fs::path gt_path = fs::path(gt_dir) / p.filename();
        sec::SegMask pred = sec::read_pgm(p);
        sec::SegMask gt = sec::read_pgm(gt_path);
        counts.push_back(sec::evaluate(pred, gt, classes));
    }
    sec::EvalReport report = sec::aggregate(counts);

    json doc;
    doc["classes"] = report.classes;
    doc["miou"] = report.miou;
    doc["fg_fraction"] = report.fg_fraction;
    json iou = json::object();
    for (int c = 0; c < report.classes; ++c)
        if (report.defined[c]) iou[std::to_string(c)] = report.iou[c];
    doc["iou"] = iou;
    write_json(out_path, doc);
    std::cout << "mIoU " << report.miou << ", fg fraction " << report.fg_fraction << "\n";
    return kExitOk;
}

int cmd_ablate(const std::string& data_dir, const std::string& cues_dir,
               const std::string& test_dir, const std::string& config_path,
               const std::string& out_path) {
    sec::RunConfig cfg = load_config_or_default(config_path);
    sec::AblationReport report = sec::run_ablation(data_dir, cues_dir, test_dir, cfg);
    json rows = json::array();
    for (const auto& v : report.variants) {
        rows.push_back({{"loss", v.name}, {"miou", v.miou}, {"fg_fraction", v.fg_fraction}});
        std::cout << v.name << ": mIoU " << v.miou << ", fg " << v.fg_fraction << "\n";
    }
    write_json(out_path, json{{"variants", rows}});
    return kExitOk;
}

int cmd_pooling_compare(const std::string& data_dir, const std::string& cues_dir,
                        const std::string& test_dir, const std::string& config_path,
                        const std::string& out_path) {
    sec::RunConfig cfg = load_config_or_default(config_path);
    sec::PoolingReport report = sec::run_pooling_compare(data_dir, cues_dir, test_dir, cfg);
    json rows = json::array();
    for (const auto& v : report.variants) {
        rows.push_back({{"pooling", v.name}, {"miou", v.miou}, {"fg_fraction", v.fg_fraction}});
        std::cout << v.name << ": mIoU " << v.miou << ", fg " << v.fg_fraction << "\n";
    }
    json doc = {{"variants", rows}, {"gt_fg_fraction", report.gt_fg_fraction}};
    std::cout << "ground truth fg " << report.gt_fg_fraction << "\n";
    write_json(out_path, doc);
    return kExitOk;
}

int cmd_gradcheck(const std::string& module) {
    std::vector<sec::CheckResult> results;
    if (module == "all")
        results = sec::gradcheck_all();
    else if (module == "pooling")
        results = sec::gradcheck_pooling();
    else if (module == "losses")
        results = sec::gradcheck_losses();
    else if (module == "network")
        results = sec::gradcheck_network();
    else
        throw sec::ConfigError("unknown gradcheck module \"" + module + "\"");

    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("%-28s max rel err %.3e (tol %.0e, %d instances) %s\n", r.name.c_str(),
                    r.max_rel_err, r.tolerance, r.instances, r.pass ? "PASS" : "FAIL");
        all_pass = all_pass && r.pass;
    }
    return all_pass ? kExitOk : kExitVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SEC weakly-supervised segmentation toolkit"};
    app.require_subcommand(1);

    std::string config_path, data_dir, cues_dir, test_dir, out_path, ckpt_path, image_path;
    std::string terms, pooling, crf = "on", module = "all", pred_dir, gt_dir;
    int count = 10, classes = 4, stride = 2;
    double fg_ratio = 0.2, bg_fraction = 0.1;
    bool deterministic = false;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen->add_option("--config", config_path, "run config JSON");
    gen->add_option("--out", out_path, "output directory")->required();
    gen->add_option("--count", count, "number of samples")->required();

    auto* cues = app.add_subcommand("cues", "derive localization cues from heatmaps/saliency");
    cues->add_option("--data", data_dir, "dataset directory")->required();
    cues->add_option("--out", out_path, "output directory")->required();
    cues->add_option("--fg-ratio", fg_ratio, "heatmap threshold ratio");
    cues->add_option("--bg-fraction", bg_fraction, "least-salient fraction");
    cues->add_option("--stride", stride, "cue mask stride relative to the image");

    auto* tr = app.add_subcommand("train", "train a segmentation network");
    tr->add_option("--data", data_dir, "dataset directory")->required();
    tr->add_option("--cues", cues_dir, "cue mask directory")->required();
    tr->add_option("--config", config_path, "run config JSON");
    tr->add_option("--out", ckpt_path, "checkpoint directory")->required();
    tr->add_option("--terms", terms, "comma-separated subset of seed,expand,constrain");
    tr->add_option("--pooling", pooling, "gmp|gap|gwrp for present classes");
    tr->add_flag("--deterministic", deterministic, "single-threaded deterministic mode");

    auto* inf = app.add_subcommand("infer", "segment one image");
    inf->add_option("--ckpt", ckpt_path, "checkpoint directory")->required();
    inf->add_option("--image", image_path, "input PPM")->required();
    inf->add_option("--out", out_path, "output mask PGM")->required();
    inf->add_option("--crf", crf, "on|off test-time CRF refinement");
    inf->add_option("--config", config_path, "run config JSON (CRF parameters)");

    auto* ev = app.add_subcommand("eval", "mIoU of predicted masks against ground truth");
    ev->add_option("--pred", pred_dir, "directory of predicted PGM masks")->required();
    ev->add_option("--gt", gt_dir, "directory of ground-truth PGM masks")->required();
    ev->add_option("--out", out_path, "report JSON")->required();
    ev->add_option("--classes", classes, "number of classes");

    auto* ab = app.add_subcommand("ablate", "loss-term ablation harness");
    ab->add_option("--data", data_dir, "training dataset")->required();
    ab->add_option("--cues", cues_dir, "cue masks")->required();
    ab->add_option("--test-data", test_dir, "held-out dataset with ground truth")->required();
    ab->add_option("--config", config_path, "run config JSON");
    ab->add_option("--out", out_path, "report JSON")->required();

    auto* pc = app.add_subcommand("pooling-compare", "GMP/GAP/GWRP comparison harness");
    pc->add_option("--data", data_dir, "training dataset")->required();
    pc->add_option("--cues", cues_dir, "cue masks")->required();
    pc->add_option("--test-data", test_dir, "held-out dataset with ground truth")->required();
    pc->add_option("--config", config_path, "run config JSON");
    pc->add_option("--out", out_path, "report JSON")->required();

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc->add_option("--module", module, "all|pooling|losses|network");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_path, count);
        if (cues->parsed()) return cmd_cues(data_dir, out_path, fg_ratio, bg_fraction, stride);
        if (tr->parsed())
            return cmd_train(data_dir, cues_dir, config_path, ckpt_path, terms, pooling);
        if (inf->parsed()) return cmd_infer(ckpt_path, image_path, out_path, crf, config_path);
        if (ev->parsed()) return cmd_eval(pred_dir, gt_dir, out_path, classes);
        if (ab->parsed()) return cmd_ablate(data_dir, cues_dir, test_dir, config_path, out_path);
        if (pc->parsed())
            return cmd_pooling_compare(data_dir, cues_dir, test_dir, config_path, out_path);
        if (gc->parsed()) return cmd_gradcheck(module);
    } catch (const sec::TrainAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const sec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
