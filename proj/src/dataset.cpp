#include "recoeval/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace recoeval {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

[[noreturn]] void fail_at(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    throw DatasetError(path.string() + ":" + std::to_string(line) + ": " + what);
}

// Collects logs and applies the keep-last duplicate policy.
class LogCollector {
public:
    explicit LogCollector(const RatingScale& scale) : scale_(scale) {}

    void add(RatingLog log, const std::filesystem::path& path, std::size_t line) {
        if (!scale_.contains(log.rating)) {
            std::ostringstream msg;
            msg << "rating " << log.rating << " outside [" << scale_.min << ", " << scale_.max << "]";
            fail_at(path, line, msg.str());
        }
        std::string key = log.user_id;
        key.push_back('\x1f');
        key += log.item_id;
        const auto [it, inserted] = position_.try_emplace(std::move(key), logs_.size());
        if (!inserted) {
            alive_[it->second] = false;
            it->second = logs_.size();
            ++duplicates_;
        }
        logs_.push_back(std::move(log));
        alive_.push_back(true);
    }

    LoadResult finish() && {
        LoadResult result;
        result.duplicates_dropped = duplicates_;
        result.logs.reserve(logs_.size() - duplicates_);
        for (std::size_t k = 0; k < logs_.size(); ++k) {
            if (alive_[k]) result.logs.push_back(std::move(logs_[k]));
        }
        return result;
    }

private:
    RatingScale scale_;
    std::vector<RatingLog> logs_;
    std::vector<bool> alive_;
    std::unordered_map<std::string, std::size_t> position_;
    std::size_t duplicates_ = 0;
};

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot read dataset file: " + path.string());
    return in;
}

void load_csv(const std::filesystem::path& path, LogCollector& out) {
    auto in = open_or_throw(path);
    std::string raw;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
        if (line.empty()) continue;
        const auto fields = split_fields(line, ',');
        const bool header_candidate = first_content;
        first_content = false;
        if (fields.size() < 3 || fields.size() > 4) {
            if (header_candidate) continue;
            fail_at(path, line_no, "expected 3 or 4 comma-separated fields");
        }
        const auto rating = parse_double(fields[2]);
        if (!rating) {
            if (header_candidate) continue;
            fail_at(path, line_no, "rating is not a number: '" + std::string(fields[2]) + "'");
        }
        if (fields[0].empty() || fields[1].empty()) fail_at(path, line_no, "empty user or item id");
        RatingLog log{std::string(fields[0]), std::string(fields[1]), *rating, std::nullopt};
        if (fields.size() == 4 && !fields[3].empty()) {
            log.timestamp = parse_int(fields[3]);
            if (!log.timestamp) fail_at(path, line_no, "timestamp is not an integer");
        }
        out.add(std::move(log), path, line_no);
    }
}

void load_netflix_file(const std::filesystem::path& path, LogCollector& out) {
    auto in = open_or_throw(path);
    std::string raw;
    std::size_t line_no = 0;
    std::string item;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (line.back() == ':') {
            item = std::string(trim(line.substr(0, line.size() - 1)));
            if (item.empty()) fail_at(path, line_no, "empty item header");
            continue;
        }
        if (item.empty()) fail_at(path, line_no, "customer line before any '<item_id>:' header");
        const auto fields = split_fields(line, ',');
        if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
            fail_at(path, line_no, "expected 'customer_id,rating,date'");
        }
        const auto rating = parse_double(fields[1]);
        if (!rating) fail_at(path, line_no, "rating is not a number: '" + std::string(fields[1]) + "'");
        out.add(RatingLog{std::string(fields[0]), item, *rating, std::nullopt}, path, line_no);
    }
}

bool all_digits(std::string_view s) noexcept {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

SparseRows build_rows(std::size_t n_rows, std::span<const Rating> ratings, bool by_user,
                      const char* what) {
    std::vector<std::size_t> order(ratings.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto row = [&](std::size_t k) { return by_user ? ratings[k].user : ratings[k].item; };
    auto col = [&](std::size_t k) { return by_user ? ratings[k].item : ratings[k].user; };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return row(a) != row(b) ? row(a) < row(b) : col(a) < col(b);
    });
    SparseRows rows;
    rows.offsets.assign(n_rows + 1, 0);
    rows.columns.reserve(ratings.size());
    rows.values.reserve(ratings.size());
    for (std::size_t p = 0; p < order.size(); ++p) {
        const std::size_t k = order[p];
        if (p > 0 && row(order[p - 1]) == row(k) && col(order[p - 1]) == col(k)) {
            throw DatasetError(std::string("duplicate (user, item) pair in ") + what);
        }
        ++rows.offsets[row(k) + 1];
        rows.columns.push_back(col(k));
        rows.values.push_back(ratings[k].value);
    }
    std::partial_sum(rows.offsets.begin(), rows.offsets.end(), rows.offsets.begin());
    return rows;
}

}  // namespace

DatasetFormat parse_dataset_format(std::string_view tag) {
    if (tag == "csv") return DatasetFormat::Csv;
    if (tag == "netflix") return DatasetFormat::Netflix;
    throw ConfigError("unknown dataset format '" + std::string(tag) + "' (expected csv or netflix)");
}

std::string_view to_string(DatasetFormat f) noexcept {
    return f == DatasetFormat::Csv ? "csv" : "netflix";
}

LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format,
                        const RatingScale& scale) {
    LogCollector collector(scale);
    std::error_code ec;
    if (format == DatasetFormat::Netflix && std::filesystem::is_directory(path, ec)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw DatasetError("no .txt files in " + path.string());
        for (const auto& f : files) load_netflix_file(f, collector);
    } else if (format == DatasetFormat::Netflix) {
        load_netflix_file(path, collector);
    } else {
        load_csv(path, collector);
    }
    return std::move(collector).finish();
}

bool id_less(std::string_view a, std::string_view b) noexcept {
    const bool da = all_digits(a);
    const bool db = all_digits(b);
    if (da != db) return da;
    if (da) {
        auto strip = [](std::string_view s) {
            const auto nz = s.find_first_not_of('0');
            return nz == std::string_view::npos ? std::string_view{} : s.substr(nz);
        };
        const auto sa = strip(a);
        const auto sb = strip(b);
        if (sa.size() != sb.size()) return sa.size() < sb.size();
        if (sa != sb) return sa < sb;
    }
    return a < b;
}

IdIndex::IdIndex(std::vector<std::string> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end(),
              [](const std::string& a, const std::string& b) { return id_less(a, b); });
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    lookup_.reserve(ids_.size());
    for (std::size_t k = 0; k < ids_.size(); ++k) lookup_.emplace(ids_[k], static_cast<Index>(k));
}

std::optional<Index> IdIndex::find(std::string_view id) const {
    const auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<double> SparseRows::find(Index row, Index column) const {
    if (row >= rows()) return std::nullopt;
    const auto cols = columns_of(row);
    const auto it = std::lower_bound(cols.begin(), cols.end(), column);
    if (it == cols.end() || *it != column) return std::nullopt;
    return values[offsets[row] + static_cast<std::size_t>(it - cols.begin())];
}

SplitDataset::SplitDataset(std::vector<RatingLog> train, std::vector<RatingLog> test,
                           RatingScale scale)
    : train_logs_(std::move(train)), test_logs_(std::move(test)), scale_(scale) {
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    user_ids.reserve(train_logs_.size() + test_logs_.size());
    item_ids.reserve(train_logs_.size() + test_logs_.size());
    for (const auto* part : {&train_logs_, &test_logs_}) {
        for (const auto& log : *part) {
            if (!scale_.contains(log.rating)) {
                throw DatasetError("rating outside the configured scale for user '" + log.user_id +
                                   "', item '" + log.item_id + "'");
            }
            user_ids.push_back(log.user_id);
            item_ids.push_back(log.item_id);
        }
    }
    users_ = IdIndex(std::move(user_ids));
    items_ = IdIndex(std::move(item_ids));

    auto intern = [&](const std::vector<RatingLog>& logs) {
        std::vector<Rating> out;
        out.reserve(logs.size());
        for (const auto& log : logs) {
            out.push_back(Rating{*users_.find(log.user_id), *items_.find(log.item_id), log.rating});
        }
        return out;
    };
    train_ = intern(train_logs_);
    test_ = intern(test_logs_);

    train_by_user_ = build_rows(users_.size(), train_, true, "train set");
    train_by_item_ = build_rows(items_.size(), train_, false, "train set");
    test_by_user_ = build_rows(users_.size(), test_, true, "test set");
    for (const auto& r : test_) {
        if (train_by_user_.find(r.user, r.item)) {
            throw DatasetError("pair (" + users_.id(r.user) + ", " + items_.id(r.item) +
                               ") is in both train and test");
        }
    }
}

SplitDataset split(std::span<const RatingLog> logs, double ratio, std::uint64_t seed,
                   const RatingScale& scale) {
    if (logs.empty()) throw DatasetError("cannot split an empty dataset");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
    std::mt19937_64 gen(seed);
    std::vector<RatingLog> train;
    std::vector<RatingLog> test;
    train.reserve(static_cast<std::size_t>(static_cast<double>(logs.size()) * ratio) + 1);
    for (const auto& log : logs) {
        // 53-bit uniform in [0, 1); avoids implementation-defined distributions.
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        (u < ratio ? train : test).push_back(log);
    }
    return SplitDataset(std::move(train), std::move(test), scale);
}

UserClass SegmentModel::user_class(Index u) const noexcept {
    const double c = u < user_counts.size() ? static_cast<double>(user_counts[u]) : 0.0;
    return c > user_threshold ? UserClass::Heavy : UserClass::Light;
}

ItemClass SegmentModel::item_class(Index i) const noexcept {
    const double c = static_cast<double>(item_count(i));
    return c > item_threshold ? ItemClass::Popular : ItemClass::Unpopular;
}

SegmentModel build_segment_model(const SplitDataset& data) {
    const auto train = data.train();
    if (train.empty()) throw DatasetError("cannot build segment statistics from an empty train set");
    SegmentModel m;
    const auto& by_user = data.train_by_user();
    const auto& by_item = data.train_by_item();

    // Sums run in index order so the result does not depend on log order.
    auto row_stats = [](const SparseRows& rows, std::vector<std::size_t>& counts,
                        std::vector<double>& means, double& total, std::size_t& present) {
        const std::size_t n = rows.rows();
        counts.assign(n, 0);
        means.assign(n, 0.0);
        total = 0.0;
        present = 0;
        for (Index r = 0; r < n; ++r) {
            const auto vals = rows.values_of(r);
            counts[r] = vals.size();
            if (vals.empty()) continue;
            ++present;
            double s = 0.0;
            for (double v : vals) s += v;
            means[r] = s / static_cast<double>(vals.size());
            total += s;
        }
    };
    double user_total = 0.0;
    double item_total = 0.0;
    std::size_t users_present = 0;
    std::size_t items_present = 0;
    row_stats(by_user, m.user_counts, m.user_means, user_total, users_present);
    row_stats(by_item, m.item_counts, m.item_means, item_total, items_present);

    const auto n = static_cast<double>(train.size());
    m.global_mean = user_total / n;
    m.user_threshold = n / static_cast<double>(users_present);
    m.item_threshold = n / static_cast<double>(items_present);
    for (std::size_t u = 0; u < m.user_means.size(); ++u) {
        if (m.user_counts[u] == 0) m.user_means[u] = m.global_mean;
    }
    for (std::size_t i = 0; i < m.item_means.size(); ++i) {
        if (m.item_counts[i] == 0) m.item_means[i] = m.global_mean;
    }
    return m;
}

Segment segment_of(const SegmentModel& model, Index user, Index item) noexcept {
    return make_segment(model.user_class(user), model.item_class(item));
}

}  // namespace recoeval
