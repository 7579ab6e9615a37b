#pragma once

// Config-driven experiment runner: train -> unlearn -> evaluate, persisted to
// an experiment directory, followed by a separate attack phase.
//
// Experiment directory layout (`<dataset>_<model>_<method>_<seed>_<UTC time>`):
//
//   config.json          input config, byte for byte
//   log.txt              key=value lines: metrics, status (deterministic)
//   timing.txt           key=value lines: wall-clock seconds
//   base/                pre-unlearning checkpoint (post-training methods)
//   model/               final checkpoint
//   user_features.f32    user representations attackers see (n_users x dim)
//   user_attr.tsv        user_idx, class_index; labels.json holds class names
//   train_loss.tsv       epoch, loss, penalty
//   unlearn_loss.tsv     step, dist_term, reg_term, total
//   ranks.tsv            user_idx, rank of the held-out positive
//   attack_log.txt       appended by the attack phase

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "unlearnrec/attack.hpp"
#include "unlearnrec/dataio.hpp"
#include "unlearnrec/recmetrics.hpp"
#include "unlearnrec/recmodels.hpp"
#include "unlearnrec/unlearning.hpp"

namespace unlearnrec {

struct UnlearnConfig {
    UnlearnMethod method = UnlearnMethod::original;
    ModelKind model = ModelKind::mf;
    std::string dataset = "ml-100k";
    /// Accepted for compatibility and ignored; there is no GPU path.
    std::optional<std::string> device;
    /// Directory holding one preprocessed dataset directory per dataset id.
    std::string data_dir = "data/processed";
    std::uint64_t seed = 0;
    TrainHyperparams train = TrainHyperparams::defaults(ModelKind::mf);
    /// au_trade_off and retrain_trade_off live here; they are top-level keys in JSON.
    UnlearnHyperparams unlearn;

    bool operator==(const UnlearnConfig&) const = default;
};

/// Parses the experiment config. Unknown keys raise ConfigError naming the key.
UnlearnConfig parse_unlearn_config(const std::string& json_text);
std::string serialize_config(const UnlearnConfig& config);

struct AttackConfig {
    /// Experiment directory: absolute, relative to the working directory, or
    /// a name under the results root.
    std::string experiment;
    std::vector<AttackerKind> attackers = {AttackerKind::mlp, AttackerKind::gbt};
    AttackSettings settings;

    bool operator==(const AttackConfig&) const = default;
};

AttackConfig parse_attack_config(const std::string& json_text);
std::string serialize_config(const AttackConfig& config);

/// `UNLEARN_RESULTS_DIR` if set, else ./exp_results.
std::filesystem::path results_root();

struct ExperimentRecord {
    std::filesystem::path dir;
    RecReport base_rec;  // pre-unlearning model (equals `rec` for in-training methods)
    RecReport rec;
    double wall_time_seconds = 0.0;
    std::vector<LossRecord> unlearn_trace;
};

/// Runs one experiment and persists it under `results`. `config_text` is
/// copied verbatim into config.json (serialized config when empty). Errors are
/// rethrown with a "[phase]" prefix after the record is marked incomplete.
ExperimentRecord run_experiment(const UnlearnConfig& config, const std::filesystem::path& results,
                                const std::string& config_text = {});

std::filesystem::path resolve_experiment_dir(const std::string& experiment, const std::filesystem::path& results);

/// Attack features and labels stored in a complete experiment record.
struct RecordFeatures {
    Matrix users;
    AttributeLabels labels;
};

RecordFeatures load_record_features(const std::filesystem::path& dir);

/// Runs every attacker x seed on the record and appends the reports to
/// attack_log.txt.
std::vector<AttackReport> run_attack(const AttackConfig& config, const std::filesystem::path& results);

/// Key=value lines for one report (one line per fold plus a summary line).
std::string format_attack_report(const AttackReport& report);

struct HistogramRow {
    std::size_t dim = 0;
    std::size_t cls = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;

    bool operator==(const HistogramRow&) const = default;
};

/// Per dimension, per class counts over n_bins equal-width bins spanning the
/// min/max of that dimension over all users. Bins are [lo, hi) except the last,
/// which is closed. A constant dimension puts every value in bin 0.
std::vector<HistogramRow> embedding_histograms(const Matrix& users, const AttributeLabels& labels, std::size_t n_bins,
                                               const std::vector<std::size_t>& dims);

std::string histograms_tsv(const std::vector<HistogramRow>& rows, const AttributeLabels& labels);

/// Reads a record and renders its histogram TSV. Empty `dims` means the first
/// min(8, dim) dimensions.
std::string export_embedding_histograms(const std::filesystem::path& record, std::size_t n_bins = 50,
                                        std::vector<std::size_t> dims = {});

}  // namespace unlearnrec
