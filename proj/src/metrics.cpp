#include "polyglot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polyglot/errors.hpp"

namespace polyglot {

namespace {

void require_pair(const MeshSeq& pred, const MeshSeq& gt, std::span<const std::size_t> lip_ids, bool same_length) {
    if (lip_ids.empty()) {
        throw DataError("metrics: empty lip vertex set");
    }
    if (pred.n_vertices != gt.n_vertices || (same_length && pred.length() != gt.length())) {
        throw ShapeError("metrics: prediction and ground truth differ in shape");
    }
    if (pred.length() == 0 || gt.length() == 0) {
        throw ShapeError("metrics: empty sequence");
    }
    for (std::size_t v : lip_ids) {
        if (v >= pred.n_vertices) {
            throw DataError("metrics: lip vertex id out of range");
        }
    }
}

double vertex_distance(const MeshSeq& a, std::size_t i, const MeshSeq& b, std::size_t j, std::size_t v) {
    const auto p = a.vertex(i, v);
    const auto q = b.vertex(j, v);
    double acc = 0.0;
    for (int d = 0; d < 3; ++d) {
        const double diff = static_cast<double>(p[d]) - static_cast<double>(q[d]);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

}  // namespace

double lve(const MeshSeq& pred, const MeshSeq& gt, std::span<const std::size_t> lip_ids, double unit_scale) {
    require_pair(pred, gt, lip_ids, true);
    double acc = 0.0;
    for (std::size_t t = 0; t < pred.length(); ++t) {
        double worst = 0.0;
        for (std::size_t v : lip_ids) {
            worst = std::max(worst, vertex_distance(pred, t, gt, t, v));
        }
        acc += worst;
    }
    return unit_scale * acc / static_cast<double>(pred.length());
}

double mve(const MeshSeq& pred, const MeshSeq& gt, std::span<const std::size_t> lip_ids, double unit_scale) {
    require_pair(pred, gt, lip_ids, true);
    double acc = 0.0;
    for (std::size_t t = 0; t < pred.length(); ++t) {
        acc += lip_frame_distance(pred, t, gt, t, lip_ids);
    }
    return unit_scale * acc / static_cast<double>(pred.length());
}

double lip_frame_distance(const MeshSeq& a, std::size_t i, const MeshSeq& b, std::size_t j,
                          std::span<const std::size_t> lip_ids) {
    double acc = 0.0;
    for (std::size_t v : lip_ids) {
        acc += vertex_distance(a, i, b, j, v);
    }
    return acc / static_cast<double>(lip_ids.size());
}

DtwResult dtw(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0 || cost.size() != rows * cols) {
        throw ShapeError("dtw: cost matrix shape mismatch");
    }
    // Lexicographic (total, length) so equal totals prefer the shorter path.
    std::vector<DtwResult> best(rows * cols);
    const auto better = [](const DtwResult& a, const DtwResult& b) {
        return a.total < b.total || (a.total == b.total && a.length < b.length);
    };
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double c = cost[i * cols + j];
            if (i == 0 && j == 0) {
                best[0] = {c, 1};
                continue;
            }
            DtwResult pick{std::numeric_limits<double>::infinity(), 0};
            if (i > 0 && j > 0 && better(best[(i - 1) * cols + j - 1], pick)) {
                pick = best[(i - 1) * cols + j - 1];
            }
            if (i > 0 && better(best[(i - 1) * cols + j], pick)) {
                pick = best[(i - 1) * cols + j];
            }
            if (j > 0 && better(best[i * cols + j - 1], pick)) {
                pick = best[i * cols + j - 1];
            }
            best[i * cols + j] = {pick.total + c, pick.length + 1};
        }
    }
    return best.back();
}

double dtw_lip(const MeshSeq& pred, const MeshSeq& gt, std::span<const std::size_t> lip_ids, double unit_scale) {
    require_pair(pred, gt, lip_ids, false);
    const std::size_t rows = pred.length();
    const std::size_t cols = gt.length();
    std::vector<double> cost(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            cost[i * cols + j] = unit_scale * lip_frame_distance(pred, i, gt, j, lip_ids);
        }
    }
    return dtw(cost, rows, cols).normalized();
}

double mouth_opening_discrepancy(const MeshSeq& pred, const MeshSeq& gt, const MorphableModel& model,
                                 double unit_scale) {
    if (pred.length() != gt.length() || pred.length() == 0) {
        throw ShapeError("mod: sequences differ in length");
    }
    const auto a = mouth_opening(pred, model);
    const auto b = mouth_opening(gt, model);
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        acc += std::abs(a[t] - b[t]);
    }
    return unit_scale * acc / static_cast<double>(a.size());
}

MetricValues evaluate_pair(const MeshSeq& pred, const MeshSeq& gt, const MorphableModel& model) {
    const double scale = model.millimeters_per_unit();
    const auto& lips = model.lip_vertex_ids;
    return {lve(pred, gt, lips, scale), mve(pred, gt, lips, scale), dtw_lip(pred, gt, lips, scale),
            mouth_opening_discrepancy(pred, gt, model, scale)};
}

void MetricReport::add(const std::string& language, const MetricValues& values) {
    const auto update = [&values](MetricValues& acc, std::size_t count) {
        const double w = 1.0 / static_cast<double>(count);
        acc.lve += (values.lve - acc.lve) * w;
        acc.mve += (values.mve - acc.mve) * w;
        acc.dtw += (values.dtw - acc.dtw) * w;
        acc.mod += (values.mod - acc.mod) * w;
    };
    ++samples;
    update(overall, samples);
    const std::size_t n = ++per_language_count[language];
    update(per_language[language], n);
}

}  // namespace polyglot
