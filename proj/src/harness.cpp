#include "unlearnrec/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"
#include "unlearnrec/errors.hpp"

namespace unlearnrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (!known.contains(key)) throw ConfigError("unknown config key '" + (where.empty() ? "" : where + ".") + key + "'");
    }
}

template <class T>
T get_as(const json& obj, const std::string& key) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

double get_number(const json& obj, const std::string& key) {
    if (!obj.at(key).is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return obj.at(key).get<double>();
}

std::size_t get_count(const json& obj, const std::string& key) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError("config key '" + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

bool get_bool(const json& obj, const std::string& key) {
    if (!obj.at(key).is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
    return obj.at(key).get<bool>();
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

void apply_train(const json& obj, TrainHyperparams& hp) {
    reject_unknown(obj, {"dim", "learning_rate", "l2_weight", "epochs", "batch_size", "neg_per_pos", "lgcn_layers",
                         "init_std", "optimizer"},
                   "train");
    if (obj.contains("dim")) hp.dim = get_count(obj, "dim");
    if (obj.contains("learning_rate")) hp.learning_rate = get_number(obj, "learning_rate");
    if (obj.contains("l2_weight")) hp.l2_weight = get_number(obj, "l2_weight");
    if (obj.contains("epochs")) hp.epochs = get_count(obj, "epochs");
    if (obj.contains("batch_size")) hp.batch_size = get_count(obj, "batch_size");
    if (obj.contains("neg_per_pos")) hp.neg_per_pos = get_count(obj, "neg_per_pos");
    if (obj.contains("lgcn_layers")) hp.lgcn_layers = get_count(obj, "lgcn_layers");
    if (obj.contains("init_std")) hp.init_std = get_number(obj, "init_std");
    if (obj.contains("optimizer")) hp.optimizer = parse_optimizer(get_as<std::string>(obj, "optimizer"));
}

void apply_unlearn(const json& obj, UnlearnHyperparams& hp) {
    reject_unknown(obj, {"steps", "learning_rate", "optimizer", "mmd_bandwidth", "penalty_users_per_class",
                         "adv_hidden", "adv_learning_rate", "adv_frozen"},
                   "unlearn");
    if (obj.contains("steps")) hp.steps = get_count(obj, "steps");
    if (obj.contains("learning_rate")) hp.learning_rate = get_number(obj, "learning_rate");
    if (obj.contains("optimizer")) hp.optimizer = parse_optimizer(get_as<std::string>(obj, "optimizer"));
    if (obj.contains("mmd_bandwidth")) {
        const auto& v = obj.at("mmd_bandwidth");
        if (v.is_null() || (v.is_string() && v.get<std::string>() == "median")) {
            hp.mmd_bandwidth.reset();
        } else {
            hp.mmd_bandwidth = get_number(obj, "mmd_bandwidth");
        }
    }
    if (obj.contains("penalty_users_per_class")) hp.penalty_users_per_class = get_count(obj, "penalty_users_per_class");
    if (obj.contains("adv_hidden")) hp.adv_hidden = get_count(obj, "adv_hidden");
    if (obj.contains("adv_learning_rate")) hp.adv_learning_rate = get_number(obj, "adv_learning_rate");
    if (obj.contains("adv_frozen")) hp.adv_frozen = get_bool(obj, "adv_frozen");
}

json train_json(const TrainHyperparams& hp) {
    return {{"dim", hp.dim},
            {"learning_rate", hp.learning_rate},
            {"l2_weight", hp.l2_weight},
            {"epochs", hp.epochs},
            {"batch_size", hp.batch_size},
            {"neg_per_pos", hp.neg_per_pos},
            {"lgcn_layers", hp.lgcn_layers},
            {"init_std", hp.init_std},
            {"optimizer", std::string(to_string(hp.optimizer))}};
}

json unlearn_json(const UnlearnHyperparams& hp) {
    json out = {{"steps", hp.steps},
                {"learning_rate", hp.learning_rate},
                {"optimizer", std::string(to_string(hp.optimizer))},
                {"penalty_users_per_class", hp.penalty_users_per_class},
                {"adv_hidden", hp.adv_hidden},
                {"adv_learning_rate", hp.adv_learning_rate},
                {"adv_frozen", hp.adv_frozen}};
    if (hp.mmd_bandwidth) {
        out["mmd_bandwidth"] = *hp.mmd_bandwidth;
    } else {
        out["mmd_bandwidth"] = "median";
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text, bool append = false) {
    std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

fs::path unique_dir(const fs::path& root, const std::string& stem) {
    fs::create_directories(root);
    for (int k = 0;; ++k) {
        auto candidate = root / (k == 0 ? stem : stem + "-" + std::to_string(k));
        if (fs::create_directory(candidate)) return candidate;
    }
}

std::string rec_lines(const std::string& prefix, const RecReport& rec) {
    std::string out;
    for (const auto& [k, v] : rec.ndcg) out += prefix + "ndcg@" + std::to_string(k) + "=" + format_double(v) + "\n";
    for (const auto& [k, v] : rec.hr) out += prefix + "hr@" + std::to_string(k) + "=" + format_double(v) + "\n";
    return out;
}

std::string trace_tsv(const std::vector<LossRecord>& trace) {
    std::string out = "step\tdist_term\treg_term\ttotal\n";
    for (const auto& r : trace) {
        out += std::to_string(r.step) + '\t' + format_double(r.dist) + '\t' + format_double(r.reg) + '\t' +
               format_double(r.total) + '\n';
    }
    return out;
}

void save_labels(const AttributeLabels& labels, const fs::path& dir) {
    std::string attr;
    for (std::size_t u = 0; u < labels.labels.size(); ++u) {
        attr += std::to_string(u) + '\t' + std::to_string(labels.labels[u]) + '\n';
    }
    write_text(dir / "user_attr.tsv", attr);
    write_text(dir / "labels.json", json{{"class_names", labels.class_names}}.dump(2) + "\n");
}

template <class E>
[[noreturn]] void rethrow_tagged(const std::string& phase, const E& e) {
    throw E("[" + phase + "] " + e.what());
}

/// Runs `fn`, tagging any module error with `phase`.
template <class F>
auto in_phase(const std::string& phase, std::string& current, F&& fn) {
    current = phase;
    try {
        return fn();
    } catch (const ConfigError& e) {
        rethrow_tagged(phase, e);
    } catch (const DataError& e) {
        rethrow_tagged(phase, e);
    } catch (const NumericError& e) {
        rethrow_tagged(phase, e);
    }
}

bool record_complete(const fs::path& dir) {
    std::ifstream in(dir / "log.txt");
    std::string line;
    bool complete = false;
    while (std::getline(in, line)) {
        if (line == "status=complete") complete = true;
    }
    return complete;
}

}  // namespace

UnlearnConfig parse_unlearn_config(const std::string& json_text) {
    const auto root = parse_json(json_text);
    reject_unknown(root, {"method", "model", "dataset", "device", "data_dir", "au_trade_off", "retrain_trade_off",
                          "seed", "train", "unlearn"},
                   "");
    UnlearnConfig config;
    if (root.contains("method")) config.method = parse_unlearn_method(get_as<std::string>(root, "method"));
    if (root.contains("model")) config.model = parse_model_kind(get_as<std::string>(root, "model"));
    if (root.contains("dataset")) config.dataset = get_as<std::string>(root, "dataset");
    if (root.contains("device")) config.device = get_as<std::string>(root, "device");
    if (root.contains("data_dir")) config.data_dir = get_as<std::string>(root, "data_dir");
    if (root.contains("seed")) config.seed = get_count(root, "seed");
    config.train = TrainHyperparams::defaults(config.model);
    if (root.contains("train")) apply_train(root.at("train"), config.train);
    if (root.contains("unlearn")) apply_unlearn(root.at("unlearn"), config.unlearn);
    if (root.contains("au_trade_off")) config.unlearn.au_trade_off = get_number(root, "au_trade_off");
    if (root.contains("retrain_trade_off")) config.unlearn.retrain_trade_off = get_number(root, "retrain_trade_off");
    config.train.seed = config.seed;
    config.unlearn.seed = config.seed;
    if (config.dataset.empty()) throw ConfigError("dataset must not be empty");
    config.train.validate();
    config.unlearn.validate();
    return config;
}

std::string serialize_config(const UnlearnConfig& config) {
    json out = {{"method", std::string(to_string(config.method))},
                {"model", std::string(to_string(config.model))},
                {"dataset", config.dataset},
                {"data_dir", config.data_dir},
                {"au_trade_off", config.unlearn.au_trade_off},
                {"retrain_trade_off", config.unlearn.retrain_trade_off},
                {"seed", config.seed},
                {"train", train_json(config.train)},
                {"unlearn", unlearn_json(config.unlearn)}};
    if (config.device) out["device"] = *config.device;
    return out.dump(2) + "\n";
}

AttackConfig parse_attack_config(const std::string& json_text) {
    const auto root = parse_json(json_text);
    reject_unknown(root, {"experiment", "attackers", "seeds", "train_frac", "mlp", "gbt"}, "");
    AttackConfig config;
    if (!root.contains("experiment")) throw ConfigError("attack config needs 'experiment'");
    config.experiment = get_as<std::string>(root, "experiment");
    if (root.contains("attackers")) {
        config.attackers.clear();
        for (const auto& name : get_as<std::vector<std::string>>(root, "attackers")) {
            config.attackers.push_back(parse_attacker_kind(name));
        }
        if (config.attackers.empty()) throw ConfigError("'attackers' must not be empty");
    }
    auto& s = config.settings;
    if (root.contains("seeds")) {
        s.seeds = get_as<std::vector<std::uint64_t>>(root, "seeds");
        if (s.seeds.empty()) throw ConfigError("'seeds' must not be empty");
    }
    if (root.contains("train_frac")) s.train_frac = get_number(root, "train_frac");
    if (!(s.train_frac > 0.0 && s.train_frac < 1.0)) throw ConfigError("train_frac must be in (0, 1)");
    if (root.contains("mlp")) {
        const auto& m = root.at("mlp");
        reject_unknown(m, {"hidden", "learning_rate", "l2", "epochs", "batch_size", "standardize"}, "mlp");
        if (m.contains("hidden")) s.mlp.hidden = get_as<std::vector<std::size_t>>(m, "hidden");
        if (m.contains("learning_rate")) s.mlp.learning_rate = get_number(m, "learning_rate");
        if (m.contains("l2")) s.mlp.l2 = get_number(m, "l2");
        if (m.contains("epochs")) s.mlp.epochs = get_count(m, "epochs");
        if (m.contains("batch_size")) s.mlp.batch_size = get_count(m, "batch_size");
        if (m.contains("standardize")) s.mlp.standardize = get_bool(m, "standardize");
    }
    if (root.contains("gbt")) {
        const auto& g = root.at("gbt");
        reject_unknown(g, {"rounds", "max_depth", "shrinkage", "lambda", "min_child_weight"}, "gbt");
        if (g.contains("rounds")) s.gbt.rounds = get_count(g, "rounds");
        if (g.contains("max_depth")) s.gbt.max_depth = get_count(g, "max_depth");
        if (g.contains("shrinkage")) s.gbt.shrinkage = get_number(g, "shrinkage");
        if (g.contains("lambda")) s.gbt.lambda = get_number(g, "lambda");
        if (g.contains("min_child_weight")) s.gbt.min_child_weight = get_number(g, "min_child_weight");
    }
    return config;
}

std::string serialize_config(const AttackConfig& config) {
    std::vector<std::string> kinds;
    for (auto k : config.attackers) kinds.emplace_back(to_string(k));
    const auto& s = config.settings;
    json out = {{"experiment", config.experiment},
                {"attackers", kinds},
                {"seeds", s.seeds},
                {"train_frac", s.train_frac},
                {"mlp",
                 {{"hidden", s.mlp.hidden},
                  {"learning_rate", s.mlp.learning_rate},
                  {"l2", s.mlp.l2},
                  {"epochs", s.mlp.epochs},
                  {"batch_size", s.mlp.batch_size},
                  {"standardize", s.mlp.standardize}}},
                {"gbt",
                 {{"rounds", s.gbt.rounds},
                  {"max_depth", s.gbt.max_depth},
                  {"shrinkage", s.gbt.shrinkage},
                  {"lambda", s.gbt.lambda},
                  {"min_child_weight", s.gbt.min_child_weight}}}};
    return out.dump(2) + "\n";
}

fs::path results_root() {
    if (const char* env = std::getenv("UNLEARN_RESULTS_DIR"); env != nullptr && *env != '\0') return env;
    return "exp_results";
}

ExperimentRecord run_experiment(const UnlearnConfig& config, const fs::path& results, const std::string& config_text) {
    if (config.device) {
        std::cerr << "warning: device '" << *config.device << "' ignored; running on CPU\n";
    }
    ExperimentRecord record;
    const std::string stem = config.dataset + "_" + std::string(to_string(config.model)) + "_" +
                             std::string(to_string(config.method)) + "_" + std::to_string(config.seed) + "_" +
                             utc_timestamp();
    record.dir = unique_dir(results, stem);
    const auto& dir = record.dir;
    write_text(dir / "config.json", config_text.empty() ? serialize_config(config) : config_text);
    write_text(dir / "log.txt",
               "dataset=" + config.dataset +
                   "\nmodel=" + std::string(to_string(config.model)) +
                   "\nmethod=" + std::string(to_string(config.method)) + "\nseed=" + std::to_string(config.seed) +
                   "\nstatus=running\n");

    std::string phase;
    try {
        const auto bundle = in_phase("load", phase, [&] {
            auto b = load_split(fs::path(config.data_dir) / config.dataset);
            if (!b.labels) throw DataError("dataset '" + config.dataset + "' has no attribute labels");
            return b;
        });
        const auto& split = bundle.split;
        const auto& labels = *bundle.labels;
        save_labels(labels, dir);

        const bool in_training = config.method == UnlearnMethod::retrain || config.method == UnlearnMethod::adv;
        NormAdjacency adj;
        const NormAdjacency* adj_ptr = nullptr;
        if (config.model == ModelKind::lightgcn) {
            adj = build_norm_adjacency(split.train, IsolatedNodes::allow);
            adj_ptr = &adj;
        }

        UnlearnResult result;
        if (in_training) {
            result = in_phase("unlearn", phase, [&] {
                return run_unlearn(init_model(config.model, split.train.n_users, split.train.n_items, config.train),
                                   labels, config.method, config.unlearn, &split, &config.train);
            });
            std::string tsv = "epoch\tloss\tpenalty\n";
            for (const auto& r : result.trace) {
                tsv += std::to_string(r.step) + '\t' + format_double(r.reg) + '\t' + format_double(r.total - r.reg) +
                       '\n';
            }
            write_text(dir / "train_loss.tsv", tsv);
        } else {
            const auto trained = in_phase("train", phase, [&] {
                return train(init_model(config.model, split.train.n_users, split.train.n_items, config.train), split,
                             config.train);
            });
            std::string tsv = "epoch\tloss\tpenalty\n";
            for (std::size_t e = 0; e < trained.epoch_loss.size(); ++e) {
                tsv += std::to_string(e) + '\t' + format_double(trained.epoch_loss[e]) + '\t' +
                       format_double(trained.epoch_penalty[e]) + '\n';
            }
            write_text(dir / "train_loss.tsv", tsv);
            save_checkpoint(trained.model, config.seed, dir / "base");
            record.base_rec = in_phase("evaluate", phase,
                                       [&] { return evaluate_ranking(final_embeddings(trained.model, adj_ptr), split); });
            result = in_phase("unlearn", phase, [&] {
                return run_unlearn(trained.model, labels, config.method, config.unlearn, &split, &config.train);
            });
        }
        record.wall_time_seconds = result.wall_time_seconds;
        record.unlearn_trace = result.trace;

        const auto finals = final_embeddings(result.model, adj_ptr);
        record.rec = in_phase("evaluate", phase, [&] { return evaluate_ranking(finals, split); });
        if (in_training) record.base_rec = record.rec;

        in_phase("persist", phase, [&] {
            save_checkpoint(result.model, config.seed, dir / "model");
            write_f32_table(finals.users, dir / "user_features.f32");
            write_text(dir / "unlearn_loss.tsv", trace_tsv(result.trace));
            std::string ranks = "user\trank\n";
            for (std::size_t u = 0; u < record.rec.per_user_ranks.size(); ++u) {
                ranks += std::to_string(u) + '\t' + std::to_string(record.rec.per_user_ranks[u]) + '\n';
            }
            write_text(dir / "ranks.tsv", ranks);
            write_text(dir / "timing.txt", "wall_time=" + format_double(record.wall_time_seconds) + "\n");
            std::string log = "n_users=" + std::to_string(split.train.n_users) +
                              "\nn_items=" + std::to_string(split.train.n_items) +
                              "\nfeature_dim=" + std::to_string(finals.users.cols()) + "\n";
            if (result.bandwidth > 0) log += "mmd_bandwidth=" + format_double(result.bandwidth) + "\n";
            log += rec_lines("base_", record.base_rec) + rec_lines("", record.rec) + "status=complete\n";
            write_text(dir / "log.txt", log, true);
            return 0;
        });
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        try {
            write_text(dir / "log.txt", "status=incomplete\nfailed_phase=" + phase + "\nerror=" + msg + "\n", true);
        } catch (const std::exception&) {
        }
        throw;
    }
    return record;
}

fs::path resolve_experiment_dir(const std::string& experiment, const fs::path& results) {
    const fs::path direct(experiment);
    if (fs::is_directory(direct)) return direct;
    if (fs::is_directory(results / experiment)) return results / experiment;
    throw DataError("experiment '" + experiment + "' not found (looked in . and " + results.string() + ")");
}

RecordFeatures load_record_features(const fs::path& dir) {
    const auto name = dir.filename().string();
    if (!record_complete(dir)) throw DataError("experiment '" + name + "' is not complete");
    if (!fs::exists(dir / "model" / "model.json") || !fs::exists(dir / "user_features.f32")) {
        throw DataError("experiment '" + name + "' has no model checkpoint");
    }
    RecordFeatures out;
    std::size_t n_users = 0;
    std::size_t dim = 0;
    {
        std::ifstream in(dir / "log.txt");
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const auto key = line.substr(0, eq);
            if (key == "n_users") n_users = std::stoull(line.substr(eq + 1));
            if (key == "feature_dim") dim = std::stoull(line.substr(eq + 1));
        }
    }
    if (n_users == 0 || dim == 0) throw DataError("experiment '" + name + "': log lacks n_users/feature_dim");
    out.users = read_f32_table(dir / "user_features.f32", n_users, dim);
    try {
        out.labels.class_names = json::parse(read_text(dir / "labels.json")).at("class_names").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError("experiment '" + name + "': bad labels.json: " + e.what());
    }
    std::istringstream attr(read_text(dir / "user_attr.tsv"));
    std::size_t u = 0;
    std::uint32_t cls = 0;
    out.labels.labels.resize(n_users);
    std::size_t rows = 0;
    while (attr >> u >> cls) {
        if (u >= n_users || cls >= out.labels.class_names.size()) {
            throw DataError("experiment '" + name + "': user_attr.tsv row out of range");
        }
        out.labels.labels[u] = cls;
        ++rows;
    }
    if (rows != n_users) throw DataError("experiment '" + name + "': user_attr.tsv row count mismatch");
    return out;
}

std::string format_attack_report(const AttackReport& report) {
    const std::string kind(to_string(report.kind));
    std::string out;
    for (const auto& f : report.folds) {
        out += "attack_fold attacker=" + kind + " seed=" + std::to_string(f.seed) +
               " accuracy=" + format_double(f.metrics.accuracy) + " precision=" + format_double(f.metrics.precision) +
               " recall=" + format_double(f.metrics.recall) +
               " auc=" + (f.metrics.auc ? format_double(*f.metrics.auc) : std::string("nan")) + "\n";
    }
    out += "attack attacker=" + kind + " accuracy=" + format_double(report.accuracy) +
           " precision=" + format_double(report.precision) + " recall=" + format_double(report.recall) +
           " auc=" + format_double(report.auc) + " n_train=" + std::to_string(report.n_train) +
           " n_test=" + std::to_string(report.n_test) + " n_seeds=" + std::to_string(report.folds.size()) + "\n";
    return out;
}

std::vector<AttackReport> run_attack(const AttackConfig& config, const fs::path& results) {
    const auto dir = resolve_experiment_dir(config.experiment, results);
    const auto features = load_record_features(dir);
    std::vector<AttackReport> reports;
    for (auto kind : config.attackers) {
        reports.push_back(run_attacker(kind, features.users, features.labels, config.settings));
        write_text(dir / "attack_log.txt", format_attack_report(reports.back()), true);
    }
    return reports;
}

std::vector<HistogramRow> embedding_histograms(const Matrix& users, const AttributeLabels& labels, std::size_t n_bins,
                                               const std::vector<std::size_t>& dims) {
    if (n_bins == 0) throw ConfigError("n_bins must be >= 1");
    if (static_cast<std::size_t>(users.rows()) != labels.labels.size()) {
        throw DataError("histogram: label count does not match embedding rows");
    }
    std::vector<std::size_t> class_size(labels.n_classes(), 0);
    for (auto c : labels.labels) {
        if (c >= class_size.size()) throw DataError("histogram: class index out of range");
        ++class_size[c];
    }
    for (std::size_t c = 0; c < class_size.size(); ++c) {
        if (class_size[c] == 0) throw DataError("histogram: class '" + labels.class_names[c] + "' is empty");
    }
    std::vector<HistogramRow> rows;
    for (auto d : dims) {
        if (d >= static_cast<std::size_t>(users.cols())) {
            throw ConfigError("histogram: dimension " + std::to_string(d) + " out of range");
        }
        const auto col = users.col(static_cast<Eigen::Index>(d));
        const double lo = col.minCoeff();
        const double hi = col.maxCoeff();
        std::vector<HistogramRow> per_class(labels.n_classes());
        for (std::size_t c = 0; c < per_class.size(); ++c) {
            per_class[c] = {d, c, lo, hi, std::vector<std::size_t>(n_bins, 0)};
        }
        for (Eigen::Index u = 0; u < users.rows(); ++u) {
            std::size_t bin = 0;
            if (hi > lo) {
                const double pos = (col(u) - lo) / (hi - lo) * static_cast<double>(n_bins);
                bin = std::min(static_cast<std::size_t>(pos), n_bins - 1);
            }
            ++per_class[labels.labels[static_cast<std::size_t>(u)]].counts[bin];
        }
        rows.insert(rows.end(), per_class.begin(), per_class.end());
    }
    return rows;
}

std::string histograms_tsv(const std::vector<HistogramRow>& rows, const AttributeLabels& labels) {
    std::size_t n_bins = rows.empty() ? 0 : rows.front().counts.size();
    std::string out = "dim\tclass\tlo\thi";
    for (std::size_t b = 0; b < n_bins; ++b) out += "\tbin" + std::to_string(b);
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.dim) + '\t' + labels.class_names.at(r.cls) + '\t' + format_double(r.lo) + '\t' +
               format_double(r.hi);
        for (auto c : r.counts) out += '\t' + std::to_string(c);
        out += '\n';
    }
    return out;
}

std::string export_embedding_histograms(const fs::path& record, std::size_t n_bins, std::vector<std::size_t> dims) {
    const auto features = load_record_features(record);
    if (dims.empty()) {
        const auto n = std::min<std::size_t>(8, static_cast<std::size_t>(features.users.cols()));
        for (std::size_t d = 0; d < n; ++d) dims.push_back(d);
    }
    return histograms_tsv(embedding_histograms(features.users, features.labels, n_bins, dims), features.labels);
}

}  // namespace unlearnrec
