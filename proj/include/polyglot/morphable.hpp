#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "polyglot/matrix.hpp"
#include "polyglot/numerics/tensor.hpp"

namespace polyglot {

inline constexpr double kMotionFps = 25.0;

/// Linear 3DMM: V = F + C_shape * beta + C_expr * m.
/// Bases are (3N) x p and (3N) x k, row index 3*v + axis.
struct MorphableModel {
    std::size_t n_vertices = 0;
    std::size_t n_shape = 0;
    std::size_t n_expr = 0;
    std::vector<float> template_vertices;  // N x 3, row-major
    Matrix shape_basis;
    Matrix expr_basis;
    std::vector<std::size_t> lip_vertex_ids;
    std::vector<std::size_t> mouth_param_ids;
    std::size_t upper_lip_id = 0;
    std::size_t lower_lip_id = 0;
    std::string units = "meters";

    /// Throws DataError if any dimension or index list is inconsistent.
    void validate() const;
    /// Factor turning model units into millimeters (1 if units are unknown).
    [[nodiscard]] double millimeters_per_unit() const;
};

inline constexpr std::size_t kMouthParamCount = 13;

/// Per-frame expression coefficients, T x k.
struct ExpressionSeq {
    Matrix frames;
    double fps = kMotionFps;

    [[nodiscard]] std::size_t length() const noexcept { return frames.rows; }
};

/// Vertex positions per frame, stored flat as T x 3N.
struct MeshSeq {
    Matrix positions;
    std::size_t n_vertices = 0;
    double fps = kMotionFps;

    [[nodiscard]] std::size_t length() const noexcept { return positions.rows; }
    [[nodiscard]] std::span<const float, 3> vertex(std::size_t frame, std::size_t v) const {
        return std::span<const float, 3>(positions.data.data() + frame * positions.cols + 3 * v, 3);
    }
};

/// N x 3 vertices, flat.
std::vector<float> synthesize_frame(const MorphableModel& model, std::span<const float> beta,
                                    std::span<const float> expression);
MeshSeq expressions_to_meshes(const MorphableModel& model, std::span<const float> beta, const ExpressionSeq& seq);
/// T x b gather of the mouth parameters, in mouth_param_ids order.
Matrix mouth_subset(const ExpressionSeq& seq, const MorphableModel& model);
/// Per-frame distance between the designated upper- and lower-lip vertices.
std::vector<double> mouth_opening(const MeshSeq& meshes, const MorphableModel& model);

/// Differentiable synthesis used by the geometric losses. Holds the
/// transposed expression basis as a constant tensor.
class MeshSynthesizer {
public:
    explicit MeshSynthesizer(const MorphableModel& model);

    /// F + C_shape * beta, flat [3N].
    [[nodiscard]] nn::Tensor identity_offset(std::span<const float> beta) const;
    /// [T, k] expressions -> [T, 3N] vertices.
    [[nodiscard]] nn::Tensor meshes(const nn::Tensor& expressions, const nn::Tensor& offset) const;

private:
    std::vector<float> template_vertices_;
    Matrix shape_basis_;
    nn::Tensor expr_basis_t_;  // k x 3N
};

struct SyntheticModelSpec {
    std::size_t n_vertices = 200;
    std::size_t n_shape = 80;
    std::size_t n_expr = 53;
    std::size_t n_lip_vertices = 20;
    std::uint64_t seed = 7;
};

/// Desk-scale face: curved vertex grid in meters, orthonormalized random
/// bases, mouth parameters [0, 13) concentrated on a 20-vertex lip region.
MorphableModel make_synthetic_model(const SyntheticModelSpec& spec = {});

/// Writes `<path>` (PAF: template, shape_basis, expr_basis) and the JSON
/// sidecar `<path>` with extension `.json`.
void save_model(const MorphableModel& model, const std::filesystem::path& path);
MorphableModel load_model(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& paf_path);

}  // namespace polyglot
