#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "recoeval/metrics.hpp"

namespace oracle {

// Mismatches between a library table and a reference table, one line each.
inline std::vector<std::string> diff(const recoeval::MetricTable& got, const Table& want, double tol) {
    std::vector<std::string> out;
    std::size_t seen = 0;
    for (const auto& e : got.entries) {
        auto it = want.find({e.metric, e.segment});
        if (it == want.end()) {
            out.push_back("unexpected cell " + e.metric + "/" + e.segment);
            continue;
        }
        ++seen;
        const auto& w = it->second;
        std::ostringstream msg;
        msg.precision(17);
        if (e.support != w.support) {
            msg << e.metric << "/" << e.segment << " support " << e.support << " vs " << w.support;
        } else if (e.value.has_value() != w.value.has_value()) {
            msg << e.metric << "/" << e.segment << " presence differs";
        } else if (e.value && !(std::abs(*e.value - *w.value) <= tol)) {
            msg << e.metric << "/" << e.segment << " value " << *e.value << " vs " << *w.value;
        }
        if (!msg.str().empty()) out.push_back(msg.str());
    }
    if (seen != want.size()) out.push_back("cell count " + std::to_string(seen) + " vs " + std::to_string(want.size()));
    return out;
}

}  // namespace oracle
