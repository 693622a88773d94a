#include "polyglot/morphable.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "polyglot/numerics/ops.hpp"
#include "polyglot/numerics/rng.hpp"
#include "polyglot/paf.hpp"

namespace polyglot {

using nn::Real;
using nn::Tensor;

namespace {

void check_ids(const std::vector<std::size_t>& ids, std::size_t bound, const char* what) {
    std::unordered_set<std::size_t> seen;
    for (auto id : ids) {
        if (id >= bound) {
            throw DataError(std::string("morphable model: ") + what + " index out of range");
        }
        if (!seen.insert(id).second) {
            throw DataError(std::string("morphable model: duplicate ") + what + " index");
        }
    }
}

// Orthonormalizes the columns of a (rows x cols) basis in place (modified Gram-Schmidt).
void orthonormalize_columns(std::vector<double>& basis, std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t prev = 0; prev < c; ++prev) {
            double dot = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                dot += basis[r * cols + c] * basis[r * cols + prev];
            }
            for (std::size_t r = 0; r < rows; ++r) {
                basis[r * cols + c] -= dot * basis[r * cols + prev];
            }
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            norm += basis[r * cols + c] * basis[r * cols + c];
        }
        norm = std::sqrt(norm);
        for (std::size_t r = 0; r < rows; ++r) {
            basis[r * cols + c] /= norm;
        }
    }
}

}  // namespace

void MorphableModel::validate() const {
    if (n_vertices == 0 || template_vertices.size() != 3 * n_vertices) {
        throw DataError("morphable model: template size does not match n_vertices");
    }
    if (shape_basis.rows != 3 * n_vertices || shape_basis.cols != n_shape) {
        throw DataError("morphable model: shape_basis must be (3N) x n_shape");
    }
    if (expr_basis.rows != 3 * n_vertices || expr_basis.cols != n_expr) {
        throw DataError("morphable model: expr_basis must be (3N) x n_expr");
    }
    if (lip_vertex_ids.empty()) {
        throw DataError("morphable model: empty lip vertex set");
    }
    check_ids(lip_vertex_ids, n_vertices, "lip vertex");
    check_ids(mouth_param_ids, n_expr, "mouth parameter");
    if (mouth_param_ids.size() != kMouthParamCount) {
        throw DataError("morphable model: expected 13 mouth parameters, got " + std::to_string(mouth_param_ids.size()));
    }
    if (upper_lip_id >= n_vertices || lower_lip_id >= n_vertices) {
        throw DataError("morphable model: lip landmark out of range");
    }
}

double MorphableModel::millimeters_per_unit() const {
    if (units == "meters") {
        return 1000.0;
    }
    if (units == "centimeters") {
        return 10.0;
    }
    return 1.0;
}

std::vector<float> synthesize_frame(const MorphableModel& model, std::span<const float> beta,
                                    std::span<const float> expression) {
    if (beta.size() != model.n_shape || expression.size() != model.n_expr) {
        throw ShapeError("synthesize_frame: coefficient length does not match model");
    }
    const std::size_t rows = 3 * model.n_vertices;
    std::vector<float> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = model.template_vertices[r];
        const auto srow = model.shape_basis.row(r);
        for (std::size_t j = 0; j < model.n_shape; ++j) {
            acc += static_cast<double>(srow[j]) * beta[j];
        }
        const auto erow = model.expr_basis.row(r);
        for (std::size_t j = 0; j < model.n_expr; ++j) {
            acc += static_cast<double>(erow[j]) * expression[j];
        }
        out[r] = static_cast<float>(acc);
    }
    return out;
}

MeshSeq expressions_to_meshes(const MorphableModel& model, std::span<const float> beta, const ExpressionSeq& seq) {
    if (seq.frames.cols != model.n_expr) {
        throw ShapeError("expressions_to_meshes: expression width does not match model");
    }
    MeshSeq out;
    out.n_vertices = model.n_vertices;
    out.fps = seq.fps;
    out.positions = Matrix(seq.length(), 3 * model.n_vertices);
    for (std::size_t t = 0; t < seq.length(); ++t) {
        const auto frame = synthesize_frame(model, beta, seq.frames.row(t));
        std::copy(frame.begin(), frame.end(), out.positions.row(t).begin());
    }
    return out;
}

Matrix mouth_subset(const ExpressionSeq& seq, const MorphableModel& model) {
    Matrix out(seq.length(), model.mouth_param_ids.size());
    for (std::size_t t = 0; t < seq.length(); ++t) {
        for (std::size_t j = 0; j < model.mouth_param_ids.size(); ++j) {
            out(t, j) = seq.frames(t, model.mouth_param_ids[j]);
        }
    }
    return out;
}

std::vector<double> mouth_opening(const MeshSeq& meshes, const MorphableModel& model) {
    std::vector<double> out(meshes.length());
    for (std::size_t t = 0; t < meshes.length(); ++t) {
        const auto up = meshes.vertex(t, model.upper_lip_id);
        const auto lo = meshes.vertex(t, model.lower_lip_id);
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double d = static_cast<double>(up[a]) - lo[a];
            d2 += d * d;
        }
        out[t] = std::sqrt(d2);
    }
    return out;
}

MeshSynthesizer::MeshSynthesizer(const MorphableModel& model)
    : template_vertices_(model.template_vertices), shape_basis_(model.shape_basis) {
    const std::size_t rows = 3 * model.n_vertices;
    std::vector<Real> transposed(model.n_expr * rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < model.n_expr; ++j) {
            transposed[j * rows + r] = model.expr_basis(r, j);
        }
    }
    expr_basis_t_ = Tensor({model.n_expr, rows}, std::move(transposed));
}

Tensor MeshSynthesizer::identity_offset(std::span<const float> beta) const {
    if (beta.size() != shape_basis_.cols) {
        throw ShapeError("identity_offset: beta length does not match model");
    }
    const std::size_t rows = shape_basis_.rows;
    std::vector<Real> offset(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = template_vertices_[r];
        const auto srow = shape_basis_.row(r);
        for (std::size_t j = 0; j < shape_basis_.cols; ++j) {
            acc += static_cast<double>(srow[j]) * beta[j];
        }
        offset[r] = static_cast<Real>(acc);
    }
    return Tensor({rows}, std::move(offset));
}

Tensor MeshSynthesizer::meshes(const Tensor& expressions, const Tensor& offset) const {
    return nn::add_rowvec(nn::matmul(expressions, expr_basis_t_), offset);
}

MorphableModel make_synthetic_model(const SyntheticModelSpec& spec) {
    MorphableModel model;
    model.n_vertices = spec.n_vertices;
    model.n_shape = spec.n_shape;
    model.n_expr = spec.n_expr;
    const std::size_t n = spec.n_vertices;
    const std::size_t rows = 3 * n;
    Rng rng(spec.seed);

    // Near-square grid over a 14 cm x 18 cm patch, bulged towards +z.
    const auto nx = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n) * 14.0 / 18.0)));
    const std::size_t ny = (n + nx - 1) / nx;
    model.template_vertices.resize(rows);
    for (std::size_t v = 0; v < n; ++v) {
        const double x = -0.07 + 0.14 * static_cast<double>(v % nx) / static_cast<double>(std::max<std::size_t>(nx - 1, 1));
        const double y = -0.09 + 0.18 * static_cast<double>(v / nx) / static_cast<double>(std::max<std::size_t>(ny - 1, 1));
        model.template_vertices[3 * v] = static_cast<float>(x);
        model.template_vertices[3 * v + 1] = static_cast<float>(y);
        model.template_vertices[3 * v + 2] = static_cast<float>(0.05 - 4.0 * x * x - 2.0 * y * y);
    }

    // Lip region: vertices closest to the mouth center.
    const double mouth_x = 0.0;
    const double mouth_y = -0.045;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto dist = [&](std::size_t v) {
        const double dx = model.template_vertices[3 * v] - mouth_x;
        const double dy = model.template_vertices[3 * v + 1] - mouth_y;
        return dx * dx + dy * dy;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
    const std::size_t n_lip = std::min(spec.n_lip_vertices, n);
    model.lip_vertex_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_lip));
    std::sort(model.lip_vertex_ids.begin(), model.lip_vertex_ids.end());
    auto lip_score = [&](std::size_t v, double sign) {
        return sign * model.template_vertices[3 * v + 1] - 2.0 * std::abs(model.template_vertices[3 * v]);
    };
    model.upper_lip_id = *std::max_element(model.lip_vertex_ids.begin(), model.lip_vertex_ids.end(),
                                           [&](auto a, auto b) { return lip_score(a, 1.0) < lip_score(b, 1.0); });
    model.lower_lip_id = *std::max_element(model.lip_vertex_ids.begin(), model.lip_vertex_ids.end(),
                                           [&](auto a, auto b) { return lip_score(a, -1.0) < lip_score(b, -1.0); });

    const std::size_t n_mouth = std::min(kMouthParamCount, spec.n_expr);
    model.mouth_param_ids.resize(n_mouth);
    std::iota(model.mouth_param_ids.begin(), model.mouth_param_ids.end(), 0);

    std::vector<char> is_lip(n, 0);
    for (auto v : model.lip_vertex_ids) {
        is_lip[v] = 1;
    }

    std::vector<double> shape(rows * spec.n_shape);
    for (auto& s : shape) {
        s = rng.normal();
    }
    orthonormalize_columns(shape, rows, spec.n_shape);
    model.shape_basis = Matrix(rows, spec.n_shape);
    for (std::size_t i = 0; i < shape.size(); ++i) {
        model.shape_basis.data[i] = static_cast<float>(0.02 * shape[i]);
    }

    std::vector<double> expr(rows * spec.n_expr);
    for (std::size_t r = 0; r < rows; ++r) {
        const bool lip = is_lip[r / 3] != 0;
        for (std::size_t j = 0; j < spec.n_expr; ++j) {
            const double weight = j < n_mouth ? (lip ? 1.0 : 0.05) : 1.0;
            expr[r * spec.n_expr + j] = weight * rng.normal();
        }
    }
    orthonormalize_columns(expr, rows, spec.n_expr);
    model.expr_basis = Matrix(rows, spec.n_expr);
    for (std::size_t i = 0; i < expr.size(); ++i) {
        model.expr_basis.data[i] = static_cast<float>(0.03 * expr[i]);
    }
    model.validate();
    return model;
}

std::filesystem::path sidecar_path(const std::filesystem::path& paf_path) {
    auto p = paf_path;
    p.replace_extension(".json");
    return p;
}

void save_model(const MorphableModel& model, const std::filesystem::path& path) {
    model.validate();
    PafFile file;
    file.set("template", {{static_cast<std::uint32_t>(model.n_vertices), 3U}, model.template_vertices});
    file.set("shape_basis", PafArray::from_matrix(model.shape_basis));
    file.set("expr_basis", PafArray::from_matrix(model.expr_basis));
    file.write(path);

    nlohmann::json meta = {
        {"n_vertices", model.n_vertices},         {"n_shape", model.n_shape},
        {"n_expr", model.n_expr},                 {"lip_vertex_ids", model.lip_vertex_ids},
        {"mouth_param_ids", model.mouth_param_ids}, {"upper_lip_id", model.upper_lip_id},
        {"lower_lip_id", model.lower_lip_id},     {"units", model.units},
    };
    std::ofstream out(sidecar_path(path));
    if (!out) {
        throw DataError("cannot write model sidecar for '" + path.string() + "'");
    }
    out << meta.dump(2) << '\n';
}

MorphableModel load_model(const std::filesystem::path& path) {
    const PafFile file = PafFile::read(path);
    std::ifstream in(sidecar_path(path));
    if (!in) {
        throw DataError("missing model sidecar '" + sidecar_path(path).string() + "'");
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model sidecar: ") + e.what());
    }
    MorphableModel model;
    try {
        model.n_vertices = meta.at("n_vertices").get<std::size_t>();
        model.n_shape = meta.at("n_shape").get<std::size_t>();
        model.n_expr = meta.at("n_expr").get<std::size_t>();
        model.lip_vertex_ids = meta.at("lip_vertex_ids").get<std::vector<std::size_t>>();
        model.mouth_param_ids = meta.at("mouth_param_ids").get<std::vector<std::size_t>>();
        model.upper_lip_id = meta.at("upper_lip_id").get<std::size_t>();
        model.lower_lip_id = meta.at("lower_lip_id").get<std::size_t>();
        model.units = meta.value("units", std::string("meters"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model sidecar: ") + e.what());
    }
    model.template_vertices = file.get("template").values;
    model.shape_basis = file.get("shape_basis").to_matrix();
    model.expr_basis = file.get("expr_basis").to_matrix();
    model.validate();
    return model;
}

}  // namespace polyglot
