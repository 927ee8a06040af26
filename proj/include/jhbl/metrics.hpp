#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "jhbl/model.hpp"

namespace jhbl {

inline constexpr double kLogErrorFloor = -16.0;

// log10(||ref - x|| / ||ref||), floored at kLogErrorFloor.
inline double relative_log_error(const Vector& ref, const Vector& x) {
    if (ref.size() != x.size()) throw std::invalid_argument("relative_log_error: shape mismatch");
    const double rn = ref.norm();
    if (!(rn > 0.0)) throw std::domain_error("relative_log_error: reference image has zero norm");
    const double rel = (ref - x).norm() / rn;
    if (!(rel > 0.0)) return kLogErrorFloor;
    return std::max(kLogErrorFloor, std::log10(rel));
}

struct MetricsRow {
    std::string method;
    int frame = 0;  // 0-based
    double log_error = 0.0;
    int iterations = 0;
    double wall_seconds = 0.0;
};

struct MetricsTable {
    std::vector<MetricsRow> rows;

    double average(const std::string& method) const {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : rows)
            if (r.method == method) {
                sum += r.log_error;
                ++n;
            }
        if (n == 0) throw std::invalid_argument("MetricsTable: no rows for method " + method);
        return sum / n;
    }
};

inline std::vector<double> log_errors(const ImageSequence& truth, const ImageSequence& x) {
    if (truth.count() != x.count()) throw std::invalid_argument("log_errors: frame count mismatch");
    std::vector<double> out;
    for (std::size_t j = 0; j < truth.count(); ++j) out.push_back(relative_log_error(truth.frames[j], x.frames[j]));
    return out;
}

inline double average_log_error(const ImageSequence& truth, const ImageSequence& x) {
    const auto e = log_errors(truth, x);
    double s = 0.0;
    for (double v : e) s += v;
    return s / static_cast<double>(e.size());
}

}  // namespace jhbl
