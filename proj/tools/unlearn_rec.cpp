// unlearn-rec: preprocess datasets, run unlearning experiments, attack them.

#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unlearnrec/errors.hpp"
#include "unlearnrec/harness.hpp"

namespace fs = std::filesystem;
using namespace unlearnrec;

namespace {

std::string read_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void print_rec(const std::string& label, const RecReport& rec) {
    std::cout << label;
    for (const auto& [k, v] : rec.ndcg) std::cout << " ndcg@" << k << "=" << format_double(v);
    for (const auto& [k, v] : rec.hr) std::cout << " hr@" << k << "=" << format_double(v);
    std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attribute unlearning for embedding recommenders"};
    app.require_subcommand(1);

    std::string run_config;
    std::string results_override;
    auto* run = app.add_subcommand("run", "Train, unlearn and evaluate one experiment");
    run->add_option("--config", run_config, "Experiment config (JSON)")->required();
    run->add_option("--results-dir", results_override, "Results root (default $UNLEARN_RESULTS_DIR or ./exp_results)");

    std::string attack_config;
    auto* attack = app.add_subcommand("attack", "Run attribute-inference attackers on an experiment");
    attack->add_option("--config", attack_config, "Attack config (JSON)")->required();
    attack->add_option("--results-dir", results_override, "Results root");

    std::string hist_exp;
    std::size_t hist_bins = 50;
    std::vector<std::size_t> hist_dims;
    std::string hist_out;
    auto* hist = app.add_subcommand("export-hist", "Per-class histograms of user embedding dimensions");
    hist->add_option("--exp", hist_exp, "Experiment directory")->required();
    hist->add_option("--bins", hist_bins, "Number of bins")->check(CLI::PositiveNumber);
    hist->add_option("--dims", hist_dims, "Embedding dimensions (default: first 8)")->delimiter(',');
    hist->add_option("--out", hist_out, "Output TSV (default: <exp>/embedding_hist.tsv, '-' for stdout)");

    std::string raw_path;
    std::string raw_format = "ml100k";
    std::size_t min_interactions = 0;
    std::string out_dir;
    std::uint64_t split_seed = 0;
    std::size_t n_neg = 99;
    std::string attr_path;
    std::string attr_format;
    auto* prep = app.add_subcommand("preprocess", "Filter, split and store a raw ratings file");
    prep->add_option("--raw", raw_path, "Raw ratings file")->required();
    prep->add_option("--format", raw_format, "ml100k, ml1m or generic_tsv");
    prep->add_option("--min-interactions", min_interactions, "Iterative user/item interaction threshold")->required();
    prep->add_option("--out", out_dir, "Output dataset directory")->required();
    prep->add_option("--seed", split_seed, "Negative sampling seed");
    prep->add_option("--n-neg", n_neg, "Sampled negatives per test user");
    prep->add_option("--attr", attr_path, "User attribute file");
    prep->add_option("--attr-format", attr_format, "ml100k, ml1m or generic_tsv (default: --format)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const fs::path results = results_override.empty() ? results_root() : fs::path(results_override);
        if (*run) {
            const auto text = read_config(run_config);
            const auto config = parse_unlearn_config(text);
            const auto record = run_experiment(config, results, text);
            std::cout << "experiment=" << record.dir.string() << "\n";
            print_rec("base", record.base_rec);
            print_rec("unlearned", record.rec);
            std::cout << "wall_time=" << format_double(record.wall_time_seconds) << "\n";
        } else if (*attack) {
            const auto config = parse_attack_config(read_config(attack_config));
            for (const auto& report : run_attack(config, results)) std::cout << format_attack_report(report);
        } else if (*hist) {
            const auto tsv = export_embedding_histograms(hist_exp, hist_bins, hist_dims);
            if (hist_out == "-") {
                std::cout << tsv;
            } else {
                const fs::path out = hist_out.empty() ? fs::path(hist_exp) / "embedding_hist.tsv" : fs::path(hist_out);
                std::ofstream f(out, std::ios::binary | std::ios::trunc);
                if (!f) throw DataError("cannot write " + out.string());
                f << tsv;
                std::cout << "wrote " << out.string() << "\n";
            }
        } else if (*prep) {
            const auto raw = parse_raw(raw_path, parse_raw_format(raw_format));
            const auto filtered = filter_min_interactions(raw, min_interactions);
            if (filtered.n_users == 0) throw DataError("no users survive the interaction threshold");
            SplitBundle bundle;
            bundle.split = leave_one_out_split(filtered, n_neg, split_seed);
            if (!attr_path.empty()) {
                const auto fmt = parse_attr_format(attr_format.empty() ? raw_format : attr_format);
                bundle.labels = load_attributes(attr_path, fmt, bundle.split.train.user_ids);
            }
            save_split(bundle, out_dir);
            std::cout << "users=" << bundle.split.train.n_users << " items=" << bundle.split.train.n_items
                      << " train_interactions=" << bundle.split.train.interactions.size() << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
