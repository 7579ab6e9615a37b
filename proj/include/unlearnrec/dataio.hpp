#pragma once

// Raw rating ingestion, min-interaction filtering, leave-one-out splitting,
// attribute labels and the on-disk TSV layout of a preprocessed dataset.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace unlearnrec {

/// Version written into every persisted artifact header.
inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

struct RawInteraction {
    std::string user_id;
    std::string item_id;
    double rating = 0.0;
    std::int64_t timestamp = 0;

    bool operator==(const RawInteraction&) const = default;
};

enum class RawFormat { ml100k, ml1m, generic_tsv };

RawFormat parse_raw_format(std::string_view name);

/// One RawInteraction per non-empty line, in file order.
/// ml100k and generic_tsv are tab-separated, ml1m uses "::".
std::vector<RawInteraction> parse_raw(const std::filesystem::path& path, RawFormat format);

/// Bijection between opaque external IDs and dense 0-based indices.
class IdMap {
public:
    /// Returns the existing index or appends `raw` as the next index.
    std::uint32_t intern(const std::string& raw);
    std::optional<std::uint32_t> find(const std::string& raw) const;
    const std::string& raw(std::uint32_t index) const { return to_raw_.at(index); }
    std::size_t size() const { return to_raw_.size(); }

    bool operator==(const IdMap& other) const { return to_raw_ == other.to_raw_; }

private:
    std::vector<std::string> to_raw_;
    std::unordered_map<std::string, std::uint32_t> to_index_;
};

struct Interaction {
    std::uint32_t user = 0;
    std::uint32_t item = 0;
    double rating = 0.0;
    std::int64_t timestamp = 0;

    bool operator==(const Interaction&) const = default;
};

/// Interactions over dense indices. `pos_sets[u]` is the sorted, duplicate-free
/// list of items user u interacted with and always mirrors `interactions`.
struct InteractionDataset {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::vector<Interaction> interactions;
    std::vector<std::vector<std::uint32_t>> pos_sets;
    IdMap user_ids;
    IdMap item_ids;

    /// Builds pos_sets from interactions and validates index ranges.
    static InteractionDataset from_interactions(std::size_t n_users, std::size_t n_items,
                                                std::vector<Interaction> interactions,
                                                IdMap user_ids, IdMap item_ids);

    bool is_positive(std::uint32_t user, std::uint32_t item) const;

    bool operator==(const InteractionDataset&) const = default;
};

/// Iteratively drops users and items with fewer than `threshold` interactions
/// until nothing changes, then remaps survivors densely in first-appearance order.
InteractionDataset filter_min_interactions(const std::vector<RawInteraction>& raw, std::size_t threshold);

struct TestCase {
    std::uint32_t positive = 0;
    std::vector<std::uint32_t> negatives;

    bool operator==(const TestCase&) const = default;
};

struct EvalSplit {
    InteractionDataset train;
    /// Indexed by user.
    std::vector<TestCase> test;
    std::uint64_t seed = 0;
    std::size_t n_neg = 0;

    bool operator==(const EvalSplit&) const = default;
};

/// Holds out each user's most recent interaction (ties: larger item index) and
/// draws `n_neg` distinct never-interacted items per user. Every interaction of
/// the held-out (user, item) pair leaves the training set.
EvalSplit leave_one_out_split(const InteractionDataset& ds, std::size_t n_neg = 99, std::uint64_t seed = 0);

struct AttributeLabels {
    /// Indexed by user; values in [0, class_names.size()).
    std::vector<std::uint32_t> labels;
    std::vector<std::string> class_names;

    std::size_t n_classes() const { return class_names.size(); }
    bool operator==(const AttributeLabels&) const = default;
};

enum class AttrFormat {
    ml100k,       // u.user: id|age|gender|occupation|zip
    ml1m,         // users.dat: id::gender::age::occupation::zip
    generic_tsv,  // id<TAB>class
};

AttrFormat parse_attr_format(std::string_view name);

/// Reads per-user class strings and aligns them to the dense user indices of
/// `users`. Rows for users not in the map are ignored. Class indices are
/// assigned in order of first appearance over dense user index 0, 1, ...
/// `allowed` (when non-empty) restricts the accepted class strings; the ml100k
/// and ml1m formats default to {M, F}.
AttributeLabels load_attributes(const std::filesystem::path& path, AttrFormat format, const IdMap& users,
                                std::vector<std::string> allowed = {});

/// A preprocessed dataset directory: split, ID maps and optional labels.
struct SplitBundle {
    EvalSplit split;
    std::optional<AttributeLabels> labels;

    bool operator==(const SplitBundle&) const = default;
};

/// Writes meta.json, train_ratings.tsv, test_negatives.tsv, user_map.tsv,
/// item_map.tsv and (with labels) user_attr.tsv into `dir`.
void save_split(const SplitBundle& bundle, const std::filesystem::path& dir);

/// Inverse of save_split. Verifies the format version and per-file CRC32.
SplitBundle load_split(const std::filesystem::path& dir);

/// Shortest round-trip decimal form of `value`.
std::string format_double(double value);

/// CRC32 of a whole file, as 8 lowercase hex digits.
std::string file_crc32(const std::filesystem::path& path);

}  // namespace unlearnrec
