#include "recoeval/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>

namespace recoeval {

namespace {

void check_list(Index item, const std::vector<Neighbor>& list, std::size_t k) {
    if (list.size() > k) throw std::invalid_argument("neighbor list longer than K");
    for (std::size_t r = 0; r < list.size(); ++r) {
        if (list[r].item == item) throw std::invalid_argument("item listed as its own neighbor");
        if (r > 0 && !neighbor_before(list[r - 1], list[r])) {
            throw std::invalid_argument("neighbor list not in (weight desc, item asc) order");
        }
    }
}

}  // namespace

SimilarityMatrix::SimilarityMatrix(std::size_t k, std::vector<std::vector<Neighbor>> lists) : k_(k) {
    offsets_.reserve(lists.size() + 1);
    offsets_.push_back(0);
    for (std::size_t i = 0; i < lists.size(); ++i) {
        check_list(static_cast<Index>(i), lists[i], k);
        entries_.insert(entries_.end(), lists[i].begin(), lists[i].end());
        offsets_.push_back(entries_.size());
    }
}

SimilarityMatrix SimilarityMatrix::truncated(std::size_t k) const {
    std::vector<std::vector<Neighbor>> lists(items());
    for (Index i = 0; i < items(); ++i) {
        const auto n = neighbors(i);
        lists[i].assign(n.begin(), n.begin() + static_cast<std::ptrdiff_t>(std::min(k, n.size())));
    }
    return SimilarityMatrix(std::min(k, k_), std::move(lists));
}

void save_similarity(const std::filesystem::path& path, const SimilarityMatrix& m, const IdIndex& items) {
    if (m.items() > items.size()) throw std::invalid_argument("similarity matrix larger than the item index");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# k=" << m.k() << '\n' << "item_id,neighbor_id,weight\n";
    char buf[64];
    for (Index i = 0; i < m.items(); ++i) {
        for (const auto& nb : m.neighbors(i)) {
            const auto res = std::to_chars(buf, buf + sizeof buf, nb.weight);
            out << items.id(i) << ',' << items.id(nb.item) << ',' << std::string_view(buf, res.ptr - buf) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

SimilarityMatrix load_similarity(const std::filesystem::path& path, const IdIndex& items) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot read similarity file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::size_t k = 0;
    bool have_k = false;
    std::vector<std::vector<Neighbor>> lists(items.size());
    auto fail = [&](const std::string& what) {
        throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    Index last_item = kNoIndex;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.starts_with("# k=")) {
            const auto* first = line.data() + 4;
            const auto res = std::from_chars(first, line.data() + line.size(), k);
            if (res.ec != std::errc{}) fail("bad K header");
            have_k = true;
            continue;
        }
        if (line == "item_id,neighbor_id,weight") continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) fail("expected item_id,neighbor_id,weight");
        const auto item = items.find(std::string_view(line).substr(0, c1));
        const auto nb = items.find(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
        if (!item || !nb) fail("unknown item id");
        double w = 0.0;
        const auto res = std::from_chars(line.data() + c2 + 1, line.data() + line.size(), w);
        if (res.ec != std::errc{} || res.ptr != line.data() + line.size()) fail("bad weight");
        if (last_item != kNoIndex && *item != last_item && !lists[*item].empty()) {
            fail("entries of one item are not contiguous");
        }
        last_item = *item;
        lists[*item].push_back(Neighbor{*nb, w});
    }
    if (!have_k) {
        for (const auto& l : lists) k = std::max(k, l.size());
    }
    try {
        return SimilarityMatrix(k, std::move(lists));
    } catch (const std::invalid_argument& e) {
        throw DatasetError(path.string() + ": " + e.what());
    }
}

}  // namespace recoeval
