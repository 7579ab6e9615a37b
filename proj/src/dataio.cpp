#include "unlearnrec/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <tuple>

#include <zlib.h>

#include "json.hpp"
#include "unlearnrec/errors.hpp"
#include "unlearnrec/rng.hpp"

namespace unlearnrec {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + delim.size();
    }
    return out;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::string location(const fs::path& path, std::size_t line_no) {
    return path.string() + ":" + std::to_string(line_no);
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

std::uint32_t parse_index(std::string_view text, const fs::path& path, std::size_t line_no) {
    std::uint32_t v = 0;
    if (!parse_number(text, v)) {
        throw DataError(location(path, line_no) + ": expected an index, got '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Raw parsing

RawFormat parse_raw_format(std::string_view name) {
    if (name == "ml100k" || name == "ml-100k") return RawFormat::ml100k;
    if (name == "ml1m" || name == "ml-1m") return RawFormat::ml1m;
    if (name == "generic_tsv" || name == "tsv") return RawFormat::generic_tsv;
    throw ConfigError("unknown raw format '" + std::string(name) + "' (expected ml100k, ml1m or generic_tsv)");
}

std::vector<RawInteraction> parse_raw(const fs::path& path, RawFormat format) {
    const std::string_view delim = format == RawFormat::ml1m ? "::" : "\t";
    const auto lines = read_lines(path);
    std::vector<RawInteraction> out;
    out.reserve(lines.size());
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto line = strip_cr(lines[n]);
        if (line.empty()) continue;
        const auto fields = split_fields(line, delim);
        if (fields.size() != 4) {
            throw DataError(location(path, n + 1) + ": expected 4 fields, found " + std::to_string(fields.size()));
        }
        RawInteraction r;
        r.user_id = std::string(fields[0]);
        r.item_id = std::string(fields[1]);
        if (r.user_id.empty() || r.item_id.empty()) throw DataError(location(path, n + 1) + ": empty ID field");
        if (!parse_number(fields[2], r.rating) || !std::isfinite(r.rating)) {
            throw DataError(location(path, n + 1) + ": bad rating '" + std::string(fields[2]) + "'");
        }
        if (!parse_number(fields[3], r.timestamp) || r.timestamp < 0) {
            throw DataError(location(path, n + 1) + ": bad timestamp '" + std::string(fields[3]) + "'");
        }
        out.push_back(std::move(r));
    }
    if (out.empty()) throw DataError("empty dataset: " + path.string() + " has no interactions");
    return out;
}

// ---------------------------------------------------------------------------
// IdMap / InteractionDataset

std::uint32_t IdMap::intern(const std::string& raw) {
    auto [it, inserted] = to_index_.try_emplace(raw, static_cast<std::uint32_t>(to_raw_.size()));
    if (inserted) to_raw_.push_back(raw);
    return it->second;
}

std::optional<std::uint32_t> IdMap::find(const std::string& raw) const {
    auto it = to_index_.find(raw);
    if (it == to_index_.end()) return std::nullopt;
    return it->second;
}

InteractionDataset InteractionDataset::from_interactions(std::size_t n_users, std::size_t n_items,
                                                         std::vector<Interaction> interactions, IdMap user_ids,
                                                         IdMap item_ids) {
    InteractionDataset ds;
    ds.n_users = n_users;
    ds.n_items = n_items;
    ds.pos_sets.assign(n_users, {});
    for (const auto& x : interactions) {
        if (x.user >= n_users || x.item >= n_items) {
            throw DataError("interaction (" + std::to_string(x.user) + ", " + std::to_string(x.item) +
                            ") out of range");
        }
        ds.pos_sets[x.user].push_back(x.item);
    }
    for (auto& items : ds.pos_sets) {
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
    }
    ds.interactions = std::move(interactions);
    ds.user_ids = std::move(user_ids);
    ds.item_ids = std::move(item_ids);
    return ds;
}

bool InteractionDataset::is_positive(std::uint32_t user, std::uint32_t item) const {
    const auto& items = pos_sets[user];
    return std::binary_search(items.begin(), items.end(), item);
}

// ---------------------------------------------------------------------------
// Filtering

InteractionDataset filter_min_interactions(const std::vector<RawInteraction>& raw, std::size_t threshold) {
    if (threshold < 1) throw ConfigError("min-interaction threshold must be >= 1");
    if (raw.empty()) throw DataError("empty dataset: no interactions to filter");

    // Intern raw IDs once so the fixed-point loop works on integers.
    IdMap users0;
    IdMap items0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> keys(raw.size());
    for (std::size_t r = 0; r < raw.size(); ++r) {
        keys[r] = {users0.intern(raw[r].user_id), items0.intern(raw[r].item_id)};
    }

    std::vector<char> alive(raw.size(), 1);
    std::vector<std::size_t> user_count(users0.size());
    std::vector<std::size_t> item_count(items0.size());
    bool changed = true;
    while (changed) {
        std::fill(user_count.begin(), user_count.end(), 0);
        std::fill(item_count.begin(), item_count.end(), 0);
        for (std::size_t r = 0; r < raw.size(); ++r) {
            if (!alive[r]) continue;
            ++user_count[keys[r].first];
            ++item_count[keys[r].second];
        }
        changed = false;
        for (std::size_t r = 0; r < raw.size(); ++r) {
            if (alive[r] && (user_count[keys[r].first] < threshold || item_count[keys[r].second] < threshold)) {
                alive[r] = 0;
                changed = true;
            }
        }
    }

    IdMap users;
    IdMap items;
    std::vector<Interaction> kept;
    for (std::size_t r = 0; r < raw.size(); ++r) {
        if (!alive[r]) continue;
        kept.push_back({users.intern(raw[r].user_id), items.intern(raw[r].item_id), raw[r].rating, raw[r].timestamp});
    }
    if (kept.empty()) {
        throw DataError("empty dataset: nothing survives filtering at threshold " + std::to_string(threshold));
    }
    const auto n_users = users.size();
    const auto n_items = items.size();
    return InteractionDataset::from_interactions(n_users, n_items, std::move(kept), std::move(users), std::move(items));
}

// ---------------------------------------------------------------------------
// Leave-one-out split

EvalSplit leave_one_out_split(const InteractionDataset& ds, std::size_t n_neg, std::uint64_t seed) {
    constexpr std::int64_t kNone = -1;
    std::vector<std::int64_t> latest_ts(ds.n_users, kNone);
    std::vector<std::uint32_t> latest_item(ds.n_users, 0);
    for (const auto& x : ds.interactions) {
        if (std::tie(x.timestamp, x.item) > std::tie(latest_ts[x.user], latest_item[x.user])) {
            latest_ts[x.user] = x.timestamp;
            latest_item[x.user] = x.item;
        }
    }
    for (std::size_t u = 0; u < ds.n_users; ++u) {
        if (ds.pos_sets[u].size() < 2) {
            throw DataError("cannot split user '" + ds.user_ids.raw(static_cast<std::uint32_t>(u)) +
                            "': needs at least 2 distinct interacted items, has " +
                            std::to_string(ds.pos_sets[u].size()));
        }
        if (ds.n_items < ds.pos_sets[u].size() + n_neg) {
            throw DataError("cannot sample " + std::to_string(n_neg) + " negatives for user '" +
                            ds.user_ids.raw(static_cast<std::uint32_t>(u)) + "': only " +
                            std::to_string(ds.n_items - ds.pos_sets[u].size()) + " non-interacted items");
        }
    }

    std::vector<Interaction> train;
    train.reserve(ds.interactions.size());
    for (const auto& x : ds.interactions) {
        if (x.item != latest_item[x.user]) train.push_back(x);
    }

    EvalSplit split;
    split.seed = seed;
    split.n_neg = n_neg;
    split.test.resize(ds.n_users);
    for (std::size_t u = 0; u < ds.n_users; ++u) {
        auto& tc = split.test[u];
        tc.positive = latest_item[u];
        const auto& pos = ds.pos_sets[u];
        const std::size_t free = ds.n_items - pos.size();
        Rng rng(derive_seed(seed, u));
        if (free < 2 * n_neg) {
            // Dense regime: partial Fisher-Yates over the explicit candidate list.
            std::vector<std::uint32_t> cand;
            cand.reserve(free);
            for (std::uint32_t i = 0; i < ds.n_items; ++i) {
                if (!std::binary_search(pos.begin(), pos.end(), i)) cand.push_back(i);
            }
            for (std::size_t k = 0; k < n_neg; ++k) {
                const auto j = k + static_cast<std::size_t>(rng.below(cand.size() - k));
                std::swap(cand[k], cand[j]);
            }
            tc.negatives.assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(n_neg));
        } else {
            std::vector<char> taken(ds.n_items, 0);
            tc.negatives.reserve(n_neg);
            while (tc.negatives.size() < n_neg) {
                const auto i = static_cast<std::uint32_t>(rng.below(ds.n_items));
                if (taken[i] || std::binary_search(pos.begin(), pos.end(), i)) continue;
                taken[i] = 1;
                tc.negatives.push_back(i);
            }
        }
    }
    split.train = InteractionDataset::from_interactions(ds.n_users, ds.n_items, std::move(train), ds.user_ids,
                                                        ds.item_ids);
    return split;
}

// ---------------------------------------------------------------------------
// Attributes

AttrFormat parse_attr_format(std::string_view name) {
    if (name == "ml100k" || name == "ml-100k") return AttrFormat::ml100k;
    if (name == "ml1m" || name == "ml-1m") return AttrFormat::ml1m;
    if (name == "generic_tsv" || name == "tsv") return AttrFormat::generic_tsv;
    throw ConfigError("unknown attribute format '" + std::string(name) + "'");
}

AttributeLabels load_attributes(const fs::path& path, AttrFormat format, const IdMap& users,
                                std::vector<std::string> allowed) {
    if (allowed.empty() && format != AttrFormat::generic_tsv) allowed = {"M", "F"};
    std::string_view delim = "\t";
    std::size_t class_field = 1;
    std::size_t min_fields = 2;
    switch (format) {
        case AttrFormat::ml100k:
            delim = "|";
            class_field = 2;
            min_fields = 3;
            break;
        case AttrFormat::ml1m:
            delim = "::";
            class_field = 1;
            min_fields = 2;
            break;
        case AttrFormat::generic_tsv:
            break;
    }

    std::vector<std::optional<std::string>> by_user(users.size());
    const auto lines = read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto line = strip_cr(lines[n]);
        if (line.empty()) continue;
        const auto fields = split_fields(line, delim);
        if (fields.size() < min_fields || (format == AttrFormat::generic_tsv && fields.size() != 2)) {
            throw DataError(location(path, n + 1) + ": malformed attribute row");
        }
        std::string cls(fields[class_field]);
        if (cls.empty() ||
            (!allowed.empty() && std::find(allowed.begin(), allowed.end(), cls) == allowed.end())) {
            throw DataError(location(path, n + 1) + ": unknown class '" + cls + "'");
        }
        const auto idx = users.find(std::string(fields[0]));
        if (!idx) continue;
        auto& slot = by_user[*idx];
        if (slot && *slot != cls) {
            throw DataError(location(path, n + 1) + ": conflicting labels for user '" + std::string(fields[0]) +
                            "' ('" + *slot + "' vs '" + cls + "')");
        }
        slot = std::move(cls);
    }

    std::vector<std::string> missing;
    for (std::size_t u = 0; u < by_user.size(); ++u) {
        if (!by_user[u]) missing.push_back(users.raw(static_cast<std::uint32_t>(u)));
    }
    if (!missing.empty()) {
        std::string msg = "attribute file " + path.string() + " lacks " + std::to_string(missing.size()) + " users:";
        for (std::size_t k = 0; k < missing.size() && k < 20; ++k) msg += " " + missing[k];
        if (missing.size() > 20) msg += " ...";
        throw DataError(msg);
    }

    AttributeLabels out;
    out.labels.resize(by_user.size());
    for (std::size_t u = 0; u < by_user.size(); ++u) {
        auto it = std::find(out.class_names.begin(), out.class_names.end(), *by_user[u]);
        if (it == out.class_names.end()) {
            out.class_names.push_back(*by_user[u]);
            it = std::prev(out.class_names.end());
        }
        out.labels[u] = static_cast<std::uint32_t>(it - out.class_names.begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string file_crc32(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
    }
    char hex[9];
    std::snprintf(hex, sizeof(hex), "%08lx", static_cast<unsigned long>(crc));
    return hex;
}

namespace {

std::string id_map_tsv(const IdMap& ids) {
    std::string out;
    for (std::uint32_t i = 0; i < ids.size(); ++i) {
        out += std::to_string(i);
        out += '\t';
        out += ids.raw(i);
        out += '\n';
    }
    return out;
}

IdMap read_id_map(const fs::path& path, std::size_t expected) {
    IdMap ids;
    const auto lines = read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto fields = split_fields(strip_cr(lines[n]), "\t");
        if (fields.size() != 2) throw DataError(location(path, n + 1) + ": malformed ID map row");
        const auto idx = parse_index(fields[0], path, n + 1);
        if (idx != n || ids.intern(std::string(fields[1])) != idx) {
            throw DataError(location(path, n + 1) + ": ID map is not a dense bijection");
        }
    }
    if (ids.size() != expected) {
        throw DataError(path.string() + ": expected " + std::to_string(expected) + " rows, found " +
                        std::to_string(ids.size()));
    }
    return ids;
}

}  // namespace

void save_split(const SplitBundle& bundle, const fs::path& dir) {
    const auto& split = bundle.split;
    const auto& train = split.train;
    fs::create_directories(dir);

    std::string ratings;
    for (const auto& x : train.interactions) {
        ratings += std::to_string(x.user) + '\t' + std::to_string(x.item) + '\t' + format_double(x.rating) + '\t' +
                   std::to_string(x.timestamp) + '\n';
    }
    write_text(dir / "train_ratings.tsv", ratings);

    std::string negatives;
    for (std::size_t u = 0; u < split.test.size(); ++u) {
        negatives += std::to_string(u) + '\t' + std::to_string(split.test[u].positive);
        for (auto neg : split.test[u].negatives) negatives += '\t' + std::to_string(neg);
        negatives += '\n';
    }
    write_text(dir / "test_negatives.tsv", negatives);
    write_text(dir / "user_map.tsv", id_map_tsv(train.user_ids));
    write_text(dir / "item_map.tsv", id_map_tsv(train.item_ids));

    std::vector<std::string> files = {"train_ratings.tsv", "test_negatives.tsv", "user_map.tsv", "item_map.tsv"};
    nlohmann::json meta;
    meta["format_version"] = kFormatVersion;
    meta["tool_version"] = kToolVersion;
    meta["n_users"] = train.n_users;
    meta["n_items"] = train.n_items;
    meta["seed"] = split.seed;
    meta["n_neg"] = split.n_neg;
    if (bundle.labels) {
        std::string attr;
        for (std::size_t u = 0; u < bundle.labels->labels.size(); ++u) {
            attr += std::to_string(u) + '\t' + std::to_string(bundle.labels->labels[u]) + '\n';
        }
        write_text(dir / "user_attr.tsv", attr);
        files.emplace_back("user_attr.tsv");
        meta["class_names"] = bundle.labels->class_names;
    } else {
        std::error_code ec;
        fs::remove(dir / "user_attr.tsv", ec);
    }
    for (const auto& f : files) meta["files"][f] = file_crc32(dir / f);
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

SplitBundle load_split(const fs::path& dir) {
    nlohmann::json meta;
    try {
        std::ifstream in(dir / "meta.json");
        if (!in) throw DataError("missing " + (dir / "meta.json").string());
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError((dir / "meta.json").string() + ": " + e.what());
    }

    SplitBundle bundle;
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    try {
        const int version = meta.at("format_version").get<int>();
        if (version != kFormatVersion) {
            throw DataError(dir.string() + ": format version " + std::to_string(version) + " not supported (expected " +
                            std::to_string(kFormatVersion) + ")");
        }
        for (const auto& [name, crc] : meta.at("files").items()) {
            if (file_crc32(dir / name) != crc.get<std::string>()) {
                throw DataError((dir / name).string() + ": checksum mismatch (file truncated or modified)");
            }
        }
        n_users = meta.at("n_users").get<std::size_t>();
        n_items = meta.at("n_items").get<std::size_t>();
        bundle.split.seed = meta.at("seed").get<std::uint64_t>();
        bundle.split.n_neg = meta.at("n_neg").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError((dir / "meta.json").string() + ": " + e.what());
    }

    auto users = read_id_map(dir / "user_map.tsv", n_users);
    auto items = read_id_map(dir / "item_map.tsv", n_items);

    const auto ratings_path = dir / "train_ratings.tsv";
    const auto rating_lines = read_lines(ratings_path);
    std::vector<Interaction> train;
    train.reserve(rating_lines.size());
    for (std::size_t n = 0; n < rating_lines.size(); ++n) {
        const auto fields = split_fields(strip_cr(rating_lines[n]), "\t");
        if (fields.size() != 4) throw DataError(location(ratings_path, n + 1) + ": expected 4 fields");
        Interaction x;
        x.user = parse_index(fields[0], ratings_path, n + 1);
        x.item = parse_index(fields[1], ratings_path, n + 1);
        if (!parse_number(fields[2], x.rating) || !parse_number(fields[3], x.timestamp)) {
            throw DataError(location(ratings_path, n + 1) + ": bad rating or timestamp");
        }
        train.push_back(x);
    }
    bundle.split.train =
        InteractionDataset::from_interactions(n_users, n_items, std::move(train), std::move(users), std::move(items));

    const auto neg_path = dir / "test_negatives.tsv";
    const auto neg_lines = read_lines(neg_path);
    if (neg_lines.size() != n_users) {
        throw DataError(neg_path.string() + ": expected " + std::to_string(n_users) + " rows, found " +
                        std::to_string(neg_lines.size()));
    }
    bundle.split.test.resize(n_users);
    for (std::size_t n = 0; n < neg_lines.size(); ++n) {
        const auto fields = split_fields(strip_cr(neg_lines[n]), "\t");
        if (fields.size() != bundle.split.n_neg + 2) {
            throw DataError(location(neg_path, n + 1) + ": expected " + std::to_string(bundle.split.n_neg + 2) +
                            " fields");
        }
        if (parse_index(fields[0], neg_path, n + 1) != n) throw DataError(location(neg_path, n + 1) + ": rows out of order");
        auto& tc = bundle.split.test[n];
        tc.positive = parse_index(fields[1], neg_path, n + 1);
        for (std::size_t k = 2; k < fields.size(); ++k) tc.negatives.push_back(parse_index(fields[k], neg_path, n + 1));
        if (tc.positive >= n_items ||
            std::any_of(tc.negatives.begin(), tc.negatives.end(), [&](auto i) { return i >= n_items; })) {
            throw DataError(location(neg_path, n + 1) + ": item index out of range");
        }
    }

    if (meta.contains("class_names")) {
        AttributeLabels labels;
        labels.class_names = meta["class_names"].get<std::vector<std::string>>();
        const auto attr_path = dir / "user_attr.tsv";
        const auto attr_lines = read_lines(attr_path);
        if (attr_lines.size() != n_users) throw DataError(attr_path.string() + ": row count mismatch");
        labels.labels.resize(n_users);
        for (std::size_t n = 0; n < attr_lines.size(); ++n) {
            const auto fields = split_fields(strip_cr(attr_lines[n]), "\t");
            if (fields.size() != 2 || parse_index(fields[0], attr_path, n + 1) != n) {
                throw DataError(location(attr_path, n + 1) + ": malformed attribute row");
            }
            labels.labels[n] = parse_index(fields[1], attr_path, n + 1);
            if (labels.labels[n] >= labels.class_names.size()) {
                throw DataError(location(attr_path, n + 1) + ": class index out of range");
            }
        }
        bundle.labels = std::move(labels);
    }
    return bundle;
}

}  // namespace unlearnrec
