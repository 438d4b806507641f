#include "nids/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "nids/analysis.hpp"
#include "nids/dataset.hpp"
#include "nids/eval.hpp"
#include "nids/isoforest.hpp"

namespace nids::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

namespace {

gbt::GbtConfig gbt_from_json(const json& j, std::uint64_t default_seed) {
    gbt::GbtConfig c;
    c.n_rounds = j.value("n_rounds", c.n_rounds);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.min_child_weight = j.value("min_child_weight", c.min_child_weight);
    c.lambda = j.value("lambda", c.lambda);
    c.gamma = j.value("gamma", c.gamma);
    c.subsample = j.value("subsample", c.subsample);
    c.seed = j.value("seed", default_seed);
    return c;
}

gan::GanConfig gan_from_json(const json& j, std::uint64_t default_seed) {
    gan::GanConfig c;
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.gen_hidden = j.value("gen_hidden", c.gen_hidden);
    c.disc_hidden = j.value("disc_hidden", c.disc_hidden);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.seed = j.value("seed", default_seed);
    return c;
}

gbt::TuneSpace space_from_json(const json& j) {
    gbt::TuneSpace s;
    auto real_range = [&](const char* key) -> std::optional<gbt::RealRange> {
        if (!j.contains(key)) return std::nullopt;
        const json& r = j.at(key);
        gbt::RealRange rr;
        rr.lo = r.at(0).get<double>();
        rr.hi = r.at(1).get<double>();
        rr.log_scale = r.size() > 2 && r.at(2).get<std::string>() == "log";
        return rr;
    };
    auto int_range = [&](const char* key) -> std::optional<gbt::IntRange> {
        if (!j.contains(key)) return std::nullopt;
        const json& r = j.at(key);
        return gbt::IntRange{r.at(0).get<int>(), r.at(1).get<int>()};
    };
    s.n_rounds = int_range("n_rounds");
    s.max_depth = int_range("max_depth");
    s.learning_rate = real_range("learning_rate");
    s.min_child_weight = real_range("min_child_weight");
    s.lambda = real_range("lambda");
    s.gamma = real_range("gamma");
    s.subsample = real_range("subsample");
    return s;
}

} // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("config file not found: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw Error("config file " + path + ": " + e.what());
    }

    PipelineConfig c;
    c.dataset_path = j.value("dataset", "");
    c.schema_path = j.value("schema", "");
    c.label_map_path = j.value("label_map", "");
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("keep_classes"))
        for (const json& k : j.at("keep_classes")) c.keep_classes.insert(k.get<std::string>());
    if (j.contains("sentinels")) c.sentinels = j.at("sentinels").get<std::vector<std::string>>();
    c.drop_missing = j.value("drop_missing", true);
    if (j.contains("encoder"))
        for (auto& [col, dir] : j.at("encoder").items()) c.encoder_overrides[col] = dir.get<std::string>();

    const std::uint64_t base_seed = j.value("seed", 17ULL);
    if (j.contains("split")) {
        const json& s = j.at("split");
        if (s.contains("ratios")) {
            auto r = s.at("ratios").get<std::vector<double>>();
            if (r.size() != 3) throw Error("config: split.ratios needs 3 entries");
            c.split_ratios = {r[0], r[1], r[2]};
        }
        c.split_seed = s.value("seed", base_seed);
    } else {
        c.split_seed = base_seed;
    }
    c.gbt = gbt_from_json(j.value("gbt", json::object()), base_seed);
    c.gan = gan_from_json(j.value("gan", json::object()), base_seed);
    if (j.contains("gan") && j.at("gan").contains("targets"))
        for (auto& [cls, n] : j.at("gan").at("targets").items()) c.gan_targets[cls] = n.get<int>();
    if (j.contains("tune")) {
        const json& t = j.at("tune");
        c.tune.enabled = t.value("enabled", false);
        c.tune.budget = t.value("budget", 20);
        c.tune.seed = t.value("seed", base_seed);
        if (t.contains("space")) c.tune.space = space_from_json(t.at("space"));
    } else {
        c.tune.seed = base_seed;
    }
    if (j.contains("isoforest")) {
        const json& f = j.at("isoforest");
        c.isoforest.trees = f.value("trees", 100);
        c.isoforest.psi = f.value("psi", 256);
        c.isoforest.seed = f.value("seed", base_seed);
    } else {
        c.isoforest.seed = base_seed;
    }
    return c;
}

void PipelineConfig::override_seed(std::uint64_t seed) {
    split_seed = seed;
    gbt.seed = seed;
    tune.seed = seed;
    isoforest.seed = seed;
    gan.seed = seed;
}

void PipelineConfig::override_out_dir(const std::string& dir) { out_dir = dir; }

void PipelineConfig::validate_inputs() const {
    if (dataset_path.empty()) throw Error("config: dataset path missing");
    if (!fs::exists(dataset_path)) throw MissingInputError("dataset file not found: " + dataset_path);
    if (!schema_path.empty() && !fs::exists(schema_path)) throw MissingInputError("schema file not found: " + schema_path);
    if (!label_map_path.empty() && !fs::exists(label_map_path))
        throw MissingInputError("label map file not found: " + label_map_path);
    fs::create_directories(out_dir);
}

std::string PipelineConfig::artifact(const std::string& name) const { return (fs::path(out_dir) / name).string(); }

// ---------------------------------------------------------------------------
// shared pieces
// ---------------------------------------------------------------------------

namespace {

ingest::Schema load_schema(const PipelineConfig& cfg) {
    return cfg.schema_path.empty() ? ingest::Schema::nslkdd() : ingest::Schema::load(cfg.schema_path);
}

preprocess::EncoderPlan make_plan(const PipelineConfig& cfg) {
    preprocess::EncoderPlan plan = preprocess::EncoderPlan::nslkdd_default();
    for (const auto& [col, dir] : cfg.encoder_overrides) plan.directives[col] = preprocess::directive_from(dir);
    return plan;
}

ingest::TabularDataset load_clean_dataset(const PipelineConfig& cfg) {
    const std::string path = cfg.artifact("dataset-clean.csv");
    if (!fs::exists(path)) throw MissingInputError("cleaned dataset artifact not found (run ingest first): " + path);
    return ingest::parse_nslkdd_file(path, load_schema(cfg));
}

struct EncodedSplits {
    preprocess::FittedEncoder encoder;
    preprocess::FeatureMatrix full;
    preprocess::SplitIndices split;
    preprocess::FeatureMatrix train, val, test;
};

// deterministic split -> encoder fitted on the train view only -> encoded parts
EncodedSplits encode_and_split(const PipelineConfig& cfg, const ingest::TabularDataset& ds) {
    EncodedSplits es;
    const auto& labels = ds.labels();
    std::vector<std::string> vocab(labels.begin(), labels.end());
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    std::vector<int> ids(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        ids[i] = static_cast<int>(std::lower_bound(vocab.begin(), vocab.end(), labels[i]) - vocab.begin());

    es.split = preprocess::stratified_split_ids(ids, vocab.size(), cfg.split_ratios, cfg.split_seed);
    es.encoder = preprocess::fit_encoders(ds.select_rows(es.split.train), make_plan(cfg));
    es.full = preprocess::transform(es.encoder, ds);
    es.train = es.full.subset(es.split.train);
    es.val = es.full.subset(es.split.val);
    es.test = es.full.subset(es.split.test);
    return es;
}

void write_text_artifact(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write artifact: " + path);
    out << content;
}

std::map<std::string, int> default_gan_targets(const preprocess::FeatureMatrix& train) {
    // every class but "normal" is raised to the largest attack-class count
    std::vector<long long> counts(train.class_names.size(), 0);
    for (int id : train.class_ids) ++counts[id];
    long long top = 0;
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (train.class_names[c] != "normal") top = std::max(top, counts[c]);
    std::map<std::string, int> targets;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (train.class_names[c] == "normal" || counts[c] == 0) continue;
        targets[train.class_names[c]] = static_cast<int>(top);
    }
    return targets;
}

} // namespace

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

void cmd_ingest(const PipelineConfig& cfg) {
    cfg.validate_inputs();
    ingest::Schema schema = load_schema(cfg);
    ingest::TabularDataset raw = ingest::parse_nslkdd_file(cfg.dataset_path, schema);

    std::set<std::string> sentinels(cfg.sentinels.begin(), cfg.sentinels.end());
    ingest::CleanResult cleaned = ingest::clean(raw, sentinels, cfg.drop_missing);

    ingest::LabelMap lmap =
        cfg.label_map_path.empty() ? ingest::LabelMap::builtin_nslkdd() : ingest::LabelMap::load(cfg.label_map_path);
    std::set<std::string> keep = cfg.keep_classes.empty() ? ingest::LabelMap::builtin_keep() : cfg.keep_classes;
    ingest::MapResult mapped = ingest::map_labels(cleaned.dataset, lmap, keep);

    ingest::serialize_file(mapped.dataset, cfg.artifact("dataset-clean.csv"));

    ingest::ClassHistogram hist = ingest::class_distribution(mapped.dataset);
    std::ostringstream hist_csv;
    hist_csv << "class,count\n";
    for (const auto& [name, count] : hist.entries) hist_csv << name << ',' << count << '\n';
    write_text_artifact(cfg.artifact("class-distribution.csv"), hist_csv.str());

    json report;
    report["source"] = cfg.dataset_path;
    report["rows_parsed"] = raw.n_rows();
    report["rows_dropped_missing"] = cleaned.report.rows_dropped;
    report["cells_replaced_sentinel"] = cleaned.report.cells_replaced;
    report["rows_dropped_by_label"] = mapped.report.rows_dropped;
    json dropped = json::object();
    for (const auto& [raw_label, n] : mapped.report.dropped_by_raw_label) dropped[raw_label] = n;
    report["dropped_by_raw_label"] = std::move(dropped);
    report["rows_final"] = mapped.dataset.n_rows();
    json card = json::object();
    for (const auto& spec : mapped.dataset.schema.columns)
        card[spec.name] = ingest::cardinality(mapped.dataset, spec.name);
    report["cardinality"] = std::move(card);
    json classes = json::object();
    for (const auto& [name, count] : hist.entries) classes[name] = count;
    report["class_distribution"] = std::move(classes);
    write_text_artifact(cfg.artifact("ingest-report.json"), report.dump(2) + "\n");
}

void cmd_train(const PipelineConfig& cfg, bool augmented) {
    fs::create_directories(cfg.out_dir);
    ingest::TabularDataset ds = load_clean_dataset(cfg);
    EncodedSplits es = encode_and_split(cfg, ds);
    es.encoder.save(cfg.artifact("encoder.json"));

    const std::string tag = augmented ? "augmented" : "baseline";

    gbt::GbtConfig model_cfg = cfg.gbt;
    if (cfg.tune.enabled) {
        gbt::TuneResult tuned = gbt::tune(es.train, es.val, cfg.tune.budget, cfg.tune.space, cfg.gbt, cfg.tune.seed);
        std::ostringstream trials;
        gbt::write_trials_csv(trials, tuned.trials);
        write_text_artifact(cfg.artifact("tune-trials-" + tag + ".csv"), trials.str());
        model_cfg = tuned.best;
    }

    preprocess::FeatureMatrix train_m = es.train;
    if (augmented) {
        std::map<std::string, int> targets = cfg.gan_targets.empty() ? default_gan_targets(es.train) : cfg.gan_targets;
        gan::AugmentResult aug = gan::augment(es.train, targets, cfg.gan, es.encoder);
        train_m = std::move(aug.augmented);
        for (const gan::PerClassAugment& pca : aug.per_class) {
            std::ostringstream trace;
            gan::write_trace_csv(trace, pca.trace);
            write_text_artifact(cfg.artifact("gan-trace-" + pca.class_name + ".csv"), trace.str());
            gan::save_gan(cfg.artifact("gan-model-" + pca.class_name + ".json"), pca.generator, pca.discriminator);

            preprocess::FeatureMatrix synth_m;
            synth_m.values = pca.synthetic;
            synth_m.feature_names = es.train.feature_names;
            synth_m.class_names = es.train.class_names;
            synth_m.class_ids.assign(pca.synthetic.rows, pca.class_id);
            auto pairs = analysis::real_vs_synthetic_summary(es.train, synth_m, pca.class_name);
            std::ostringstream paired;
            analysis::write_paired_csv(paired, pairs);
            write_text_artifact(cfg.artifact("real-vs-synthetic-" + pca.class_name + ".csv"), paired.str());
        }
    }

    gbt::BoostedEnsemble model = gbt::train(train_m, model_cfg);
    model.save(cfg.artifact("model-" + tag + ".json"));

    std::ostringstream loss_csv;
    loss_csv << "round,train_loss\n";
    for (std::size_t r = 0; r < model.train_loss.size(); ++r)
        loss_csv << r << ',' << format_double(model.train_loss[r]) << '\n';
    write_text_artifact(cfg.artifact("train-loss-" + tag + ".csv"), loss_csv.str());

    auto importance = gbt::feature_importance(model);
    std::ostringstream imp_csv;
    imp_csv << "rank,feature,mean_gain,total_gain,splits\n";
    for (std::size_t i = 0; i < importance.size(); ++i)
        imp_csv << i + 1 << ',' << importance[i].feature << ',' << format_double(importance[i].mean_gain) << ','
                << format_double(importance[i].total_gain) << ',' << importance[i].splits << '\n';
    write_text_artifact(cfg.artifact("feature-importance-" + tag + ".csv"), imp_csv.str());

    std::vector<int> pred = gbt::predict(model, es.test);
    eval::ConfusionMatrix cm = eval::confusion(pred, es.test.class_ids, es.test.class_names);
    eval::ClassMetrics metrics = eval::metrics(cm);
    write_text_artifact(cfg.artifact("metrics-" + tag + ".json"), eval::metrics_to_json(metrics));
    std::ostringstream cm_csv;
    eval::write_confusion_csv(cm_csv, cm);
    write_text_artifact(cfg.artifact("confusion-" + tag + ".csv"), cm_csv.str());

    json report;
    report["tag"] = tag;
    report["rows"] = ds.n_rows();
    report["train_rows"] = train_m.n_rows();
    report["val_rows"] = es.val.n_rows();
    report["test_rows"] = es.test.n_rows();
    report["split_seed"] = es.split.seed;
    report["split_warnings"] = es.split.warnings;
    report["tuned"] = cfg.tune.enabled;
    json mc;
    mc["n_rounds"] = model_cfg.n_rounds;
    mc["learning_rate"] = model_cfg.learning_rate;
    mc["max_depth"] = model_cfg.max_depth;
    mc["min_child_weight"] = model_cfg.min_child_weight;
    mc["lambda"] = model_cfg.lambda;
    mc["gamma"] = model_cfg.gamma;
    mc["subsample"] = model_cfg.subsample;
    mc["seed"] = model_cfg.seed;
    report["model_config"] = std::move(mc);
    report["test_accuracy"] = metrics.accuracy;
    write_text_artifact(cfg.artifact("train-report-" + tag + ".json"), report.dump(2) + "\n");
}

void cmd_anomaly(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    ingest::TabularDataset ds = load_clean_dataset(cfg);
    EncodedSplits es = encode_and_split(cfg, ds);

    const int psi = std::min<long long>(cfg.isoforest.psi, static_cast<long long>(es.full.n_rows()));
    isoforest::IsoForest forest = isoforest::fit(es.full, cfg.isoforest.trees, psi, cfg.isoforest.seed);
    forest.save(cfg.artifact("isoforest-model.json"));

    auto ranking = isoforest::class_anomaly_ranking(forest, es.full);
    std::ostringstream csv;
    isoforest::write_ranking_csv(csv, ranking);
    write_text_artifact(cfg.artifact("anomaly-ranking.csv"), csv.str());
}

void cmd_compare(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    auto read_metrics = [&](const std::string& name) {
        const std::string path = cfg.artifact(name);
        std::ifstream in(path);
        if (!in) throw MissingInputError("metrics artifact not found (run train first): " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return eval::metrics_from_json(ss.str());
    };
    eval::ClassMetrics before = read_metrics("metrics-baseline.json");
    eval::ClassMetrics after = read_metrics("metrics-augmented.json");
    eval::ComparisonReport report = eval::compare(before, after);

    json j;
    j["accuracy_before"] = report.before.accuracy;
    j["accuracy_after"] = report.after.accuracy;
    j["accuracy_delta"] = report.d_accuracy;
    json classes = json::array();
    for (std::size_t i = 0; i < report.deltas.size(); ++i) {
        const eval::ClassDelta& d = report.deltas[i];
        json e;
        e["class"] = d.name;
        e["precision_before"] = report.before.per_class[i].precision;
        e["precision_after"] = report.after.per_class[i].precision;
        e["precision_delta"] = d.d_precision;
        e["recall_before"] = report.before.per_class[i].recall;
        e["recall_after"] = report.after.per_class[i].recall;
        e["recall_delta"] = d.d_recall;
        e["f1_before"] = report.before.per_class[i].f1;
        e["f1_after"] = report.after.per_class[i].f1;
        e["f1_delta"] = d.d_f1;
        e["recall_improved"] = d.recall_improved;
        classes.push_back(std::move(e));
    }
    j["classes"] = std::move(classes);
    write_text_artifact(cfg.artifact("comparison.json"), j.dump(2) + "\n");

    std::ostringstream text;
    eval::write_comparison_text(text, report);
    write_text_artifact(cfg.artifact("comparison.txt"), text.str());
}

void cmd_eda(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    ingest::TabularDataset ds = load_clean_dataset(cfg);
    EncodedSplits es = encode_and_split(cfg, ds);

    // top-10 features by gain when a trained model exists, first ten otherwise
    std::vector<std::string> features;
    const std::string model_path = cfg.artifact("model-baseline.json");
    if (fs::exists(model_path)) {
        gbt::BoostedEnsemble model = gbt::BoostedEnsemble::load(model_path);
        for (const auto& e : gbt::feature_importance(model)) {
            features.push_back(e.feature);
            if (features.size() == 10) break;
        }
    }
    if (features.empty())
        for (std::size_t f = 0; f < es.full.feature_names.size() && f < 10; ++f)
            features.push_back(es.full.feature_names[f]);

    auto summaries = analysis::feature_summaries(es.full, features, es.full.class_names);
    std::ostringstream csv;
    analysis::write_summaries_csv(csv, summaries);
    write_text_artifact(cfg.artifact("feature-summaries.csv"), csv.str());

    // connection-duration comparison across classes
    if (std::find(es.full.feature_names.begin(), es.full.feature_names.end(), "duration") !=
        es.full.feature_names.end()) {
        auto dur = analysis::feature_summaries(es.full, {"duration"}, es.full.class_names);
        std::ostringstream dur_csv;
        analysis::write_summaries_csv(dur_csv, dur);
        write_text_artifact(cfg.artifact("duration-by-class.csv"), dur_csv.str());
    }
}

void cmd_all(const PipelineConfig& cfg) {
    cmd_ingest(cfg);
    cmd_train(cfg, false);
    cmd_train(cfg, true);
    cmd_anomaly(cfg);
    cmd_compare(cfg);
    cmd_eda(cfg);
}

int run_command(const std::string& command, const PipelineConfig& cfg, bool augmented) {
    try {
        if (command == "ingest")
            cmd_ingest(cfg);
        else if (command == "train")
            cmd_train(cfg, augmented);
        else if (command == "anomaly")
            cmd_anomaly(cfg);
        else if (command == "compare")
            cmd_compare(cfg);
        else if (command == "eda")
            cmd_eda(cfg);
        else if (command == "all")
            cmd_all(cfg);
        else
            throw Error("unknown command: " + command);
    } catch (const MissingInputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace nids::pipeline
