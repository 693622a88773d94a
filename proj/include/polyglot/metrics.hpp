#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "polyglot/morphable.hpp"

// Lip-region evaluation metrics in vertex space, computed in double precision.
// Distances are scaled by `unit_scale` (1000 turns meters into millimeters).
namespace polyglot {

double lve(const MeshSeq& pred, const MeshSeq& gt, std::span<const std::size_t> lip_ids, double unit_scale = 1.0);
double mve(const MeshSeq& pred, const MeshSeq& gt, std::span<const std::size_t> lip_ids, double unit_scale = 1.0);

/// Frame cost = mean lip-vertex distance; steps (1,1), (1,0), (0,1).
/// Returns the minimal total cost divided by its path length (ties go to
/// the shorter path). Lengths may differ.
double dtw_lip(const MeshSeq& pred, const MeshSeq& gt, std::span<const std::size_t> lip_ids,
               double unit_scale = 1.0);

/// DTW over an arbitrary row-major cost matrix, same conventions.
struct DtwResult {
    double total = 0.0;
    std::size_t length = 0;
    [[nodiscard]] double normalized() const { return length == 0 ? 0.0 : total / static_cast<double>(length); }
};
DtwResult dtw(const std::vector<double>& cost, std::size_t rows, std::size_t cols);

/// Mean lip-vertex distance between frame i of `a` and frame j of `b`.
double lip_frame_distance(const MeshSeq& a, std::size_t i, const MeshSeq& b, std::size_t j,
                          std::span<const std::size_t> lip_ids);

double mouth_opening_discrepancy(const MeshSeq& pred, const MeshSeq& gt, const MorphableModel& model,
                                 double unit_scale = 1.0);

struct MetricValues {
    double lve = 0.0;
    double mve = 0.0;
    double dtw = 0.0;
    double mod = 0.0;
};

/// All four metrics; lve, mve and mod in millimeters when the model is in meters.
MetricValues evaluate_pair(const MeshSeq& pred, const MeshSeq& gt, const MorphableModel& model);

struct MetricReport {
    MetricValues overall;
    std::map<std::string, MetricValues> per_language;
    std::map<std::string, std::size_t> per_language_count;
    std::size_t samples = 0;
    std::string distance_units = "mm";

    /// Running means.
    void add(const std::string& language, const MetricValues& values);
};

}  // namespace polyglot
