#pragma once

// Temporary directories and small synthetic datasets for tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "unlearnrec/dataio.hpp"
#include "unlearnrec/rng.hpp"

namespace fixtures {

namespace fs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        unlearnrec::Rng rng(static_cast<std::uint64_t>(std::hash<std::string>{}(tag)) ^
                            static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)));
        path_ = fs::temp_directory_path() / ("unlearnrec-" + tag + "-" + std::to_string(rng.next() % 1000000007ULL));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Synthetic {
    std::vector<unlearnrec::RawInteraction> raw;
    /// Class string per raw user id "u<k>".
    std::vector<std::string> user_class;
};

/// Users alternate between classes "M" and "F"; with probability `bias` an
/// interaction comes from the class's half of the catalogue, otherwise from
/// anywhere. Each user gets `per_user` distinct items with distinct timestamps.
inline Synthetic synthetic_raw(std::size_t n_users, std::size_t n_items, std::size_t per_user, double bias,
                               std::uint64_t seed) {
    unlearnrec::Rng rng(seed);
    Synthetic out;
    const std::size_t half = n_items / 2;
    for (std::size_t u = 0; u < n_users; ++u) {
        const bool cls = (u % 2) == 1;
        out.user_class.push_back(cls ? "F" : "M");
        std::vector<char> taken(n_items, 0);
        for (std::size_t k = 0; k < per_user;) {
            std::size_t item;
            if (rng.uniform() < bias) {
                item = (cls ? half : 0) + static_cast<std::size_t>(rng.below(cls ? n_items - half : half));
            } else {
                item = static_cast<std::size_t>(rng.below(n_items));
            }
            if (taken[item]) continue;
            taken[item] = 1;
            out.raw.push_back({"u" + std::to_string(u), "i" + std::to_string(item), 1.0 + static_cast<double>(k % 5),
                               static_cast<std::int64_t>(1000 + u * 1000 + k)});
            ++k;
        }
    }
    return out;
}

inline unlearnrec::AttributeLabels labels_for(const Synthetic& syn, const unlearnrec::IdMap& users) {
    unlearnrec::AttributeLabels labels;
    labels.class_names = {"M", "F"};
    for (std::size_t u = 0; u < users.size(); ++u) {
        const auto raw_index = std::stoul(users.raw(static_cast<std::uint32_t>(u)).substr(1));
        labels.labels.push_back(syn.user_class[raw_index] == "M" ? 0 : 1);
    }
    return labels;
}

inline unlearnrec::SplitBundle synthetic_bundle(std::size_t n_users, std::size_t n_items, std::size_t per_user,
                                                double bias, std::uint64_t seed, std::size_t threshold = 1,
                                                std::size_t n_neg = 99) {
    const auto syn = synthetic_raw(n_users, n_items, per_user, bias, seed);
    const auto ds = unlearnrec::filter_min_interactions(syn.raw, threshold);
    unlearnrec::SplitBundle bundle;
    bundle.split = unlearnrec::leave_one_out_split(ds, n_neg, seed);
    bundle.labels = labels_for(syn, bundle.split.train.user_ids);
    return bundle;
}

}  // namespace fixtures
