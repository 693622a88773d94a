#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "polyglot/dataset.hpp"
#include "polyglot/morphable.hpp"
#include "polyglot/paf.hpp"
#include "test_support.hpp"

using namespace polyglot;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = polyglot::cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
        out.push_back(cell);
    }
    return out;
}

// Small corpus shared by the slower cases: generated once per process.
const fs::path& corpus() {
    static const fs::path dir = [] {
        const fs::path d = test::temp_dir("cli_corpus");
        const Run r = invoke({"gen-synthetic", "--out", d.string(), "--seed", "4", "--languages", "3", "--speakers",
                           "5", "--sentences", "1", "--min-frames", "20", "--max-frames", "28", "--d-audio", "6",
                           "--d-text", "4"});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        return d;
    }();
    return dir;
}

const fs::path& style_checkpoint() {
    static const fs::path path = [] {
        const fs::path p = corpus() / "style.paf";
        const Run r = invoke({"train-style", "--manifest", (corpus() / "manifest.json").string(), "--out", p.string(),
                           "--seed", "1", "--width", "8", "--layers", "1", "--heads", "2", "--steps", "3", "--batch",
                           "2", "--window", "8"});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        return p;
    }();
    return path;
}

std::vector<std::string> small_train_args(const fs::path& out) {
    return {"train", "--manifest", (corpus() / "manifest.json").string(), "--model",
            (corpus() / "model.paf").string(), "--style", style_checkpoint().string(), "--out", out.string(),
            "--seed", "2", "--batch", "2", "--diffusion-steps", "5", "--window", "8", "--context", "2", "--width",
            "16", "--layers", "1", "--heads", "2"};
}

}  // namespace

TEST_CASE("usage errors exit 2 with a single error line") {
    Run r = invoke({});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("polyglot: error[usage]:", 0) == 0);
    r = invoke({"train", "--bogus"});
    CHECK(r.code == 2);
    r = invoke({"eval", "--pred-dir", "x"});
    CHECK(r.code == 2);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    r = invoke({"export-mesh", "--expr", "a", "--model", "b", "--out", "c", "--format", "fbx"});
    CHECK(r.code == 2);
}

TEST_CASE("missing inputs are data errors") {
    const Run r = invoke({"filter-data", "--manifest", "/nonexistent/m.json", "--out", "/tmp/x.json"});
    CHECK(r.code == 3);
    CHECK(r.err.rfind("polyglot: error[data]:", 0) == 0);
}

TEST_CASE("CI mode requires an explicit seed") {
    const fs::path d = test::temp_dir("cli_ci");
    ::setenv("POLYGLOT_CI", "1", 1);
    const Run without = invoke({"gen-synthetic", "--out", d.string()});
    const Run with = invoke({"gen-synthetic", "--out", d.string(), "--seed", "1", "--languages", "1", "--speakers",
                          "1", "--sentences", "1"});
    ::unsetenv("POLYGLOT_CI");
    CHECK(without.code == 2);
    CHECK(without.err.find("--seed") != std::string::npos);
    CHECK(with.code == 0);
}

TEST_CASE("help lists every train flag") {
    const Run r = invoke({"train", "--help"});
    CHECK(r.code == 0);
    for (const char* flag :
         {"--manifest", "--model", "--style", "--out", "--resume", "--log", "--seed", "--epochs", "--steps", "--batch",
          "--lr", "--diffusion-steps", "--window", "--context", "--width", "--layers", "--heads", "--radius",
          "--causal-mask", "--p-drop-audio", "--p-drop-cond", "--grad-clip", "--lambda-sim", "--lambda-mouth",
          "--lambda-style", "--lambda-v", "--lambda-vel", "--lambda-s", "--no-style-S", "--no-text-t",
          "--no-style-loss", "--lookup-table-language"}) {
        INFO(flag);
        CHECK(r.out.find(flag) != std::string::npos);
    }
}

TEST_CASE("filter and split through the CLI") {
    const fs::path d = test::temp_dir("cli_filter");
    std::vector<SampleRecord> records;
    for (int i = 0; i < 30; ++i) {
        SampleRecord r;
        r.id = "s" + std::to_string(i);
        r.language = i % 2 == 0 ? "en" : "zh";
        r.speaker = "p";
        r.n_frames = 10;
        r.pesq = i < 4 ? 1.5 : 3.0;
        r.rle = 1.0;
        records.push_back(r);
    }
    save_manifest(d / "all.json", records, d);
    Run r = invoke({"filter-data", "--manifest", (d / "all.json").string(), "--out", (d / "kept.json").string(),
                 "--rejected", (d / "rejected.json").string()});
    REQUIRE(r.code == 0);
    CHECK(load_manifest(d / "kept.json").records.size() == 26);
    std::ifstream rej(d / "rejected.json");
    const auto j = nlohmann::json::parse(rej);
    CHECK(j.size() == 4);
    CHECK(j[0]["reason"] == "pesq");

    r = invoke({"split-data", "--manifest", (d / "kept.json").string(), "--out", (d / "split").string(), "--seed", "3",
             "--train", "8", "--val", "2", "--test", "2"});
    REQUIRE(r.code == 0);
    CHECK(load_manifest(d / "split" / "train.json").records.size() == 16);
    CHECK(load_manifest(d / "split" / "val.json").records.size() == 4);
    CHECK(load_manifest(d / "split" / "test.json").records.size() == 4);
}

TEST_CASE("eval of ground truth against itself is zero and CSV matches JSON") {
    const fs::path pred = test::temp_dir("cli_eval");
    const Manifest m = load_manifest(corpus() / "manifest.json");
    for (const auto& rec : m.records) {
        const SampleData s = load_sample(rec, m.base_dir);
        PafFile f;
        f.set("expressions", PafArray::from_matrix(s.expressions));
        f.write(pred / (rec.id + ".paf"));
    }
    const Run r = invoke({"eval", "--pred-dir", pred.string(), "--gt-manifest", (corpus() / "manifest.json").string(),
                       "--model", (corpus() / "model.paf").string(), "--out", (pred / "report.json").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::ifstream in(pred / "report.json");
    const auto report = nlohmann::json::parse(in);
    CHECK(report["samples"] == m.records.size());
    CHECK(report["units"]["lve"] == "mm");
    CHECK(report["units"]["dtw"] == "normalized mm");
    for (const char* key : {"lve", "mve", "dtw", "mod"}) {
        CHECK(report["overall"][key].get<double>() == 0.0);
    }
    CHECK(report["per_language"].size() == 3);

    const auto rows = lines_of(pred / "report.csv");
    REQUIRE(rows.size() == m.records.size() + 1);
    CHECK(rows[0] == "id,language,lve,mve,dtw,mod");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto cells = split_csv(rows[i]);
        REQUIRE(cells.size() == 6);
        for (std::size_t c = 2; c < 6; ++c) {
            CHECK(std::stod(cells[c]) == 0.0);
        }
    }

    fs::remove(pred / (m.records.front().id + ".paf"));
    const Run missing = invoke({"eval", "--pred-dir", pred.string(), "--gt-manifest",
                             (corpus() / "manifest.json").string(), "--model", (corpus() / "model.paf").string(),
                             "--out", (pred / "r2.json").string()});
    CHECK(missing.code == 3);
}

TEST_CASE("eval CSV means agree with the JSON report") {
    const fs::path pred = test::temp_dir("cli_eval_noise");
    const Manifest m = load_manifest(corpus() / "manifest.json");
    Rng rng(3);
    for (const auto& rec : m.records) {
        SampleData s = load_sample(rec, m.base_dir);
        for (auto& v : s.expressions.data) {
            v += static_cast<float>(0.05 * rng.normal());
        }
        PafFile f;
        f.set("expressions", PafArray::from_matrix(s.expressions));
        f.write(pred / (rec.id + ".paf"));
    }
    const Run r = invoke({"eval", "--pred-dir", pred.string(), "--gt-manifest", (corpus() / "manifest.json").string(),
                       "--model", (corpus() / "model.paf").string(), "--out", (pred / "report.json").string(),
                       "--csv", (pred / "rows.csv").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::ifstream in(pred / "report.json");
    const auto report = nlohmann::json::parse(in);
    const auto rows = lines_of(pred / "rows.csv");
    double sums[4] = {0, 0, 0, 0};
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto cells = split_csv(rows[i]);
        for (std::size_t c = 0; c < 4; ++c) {
            sums[c] += std::stod(cells[c + 2]);
        }
    }
    const double n = static_cast<double>(rows.size() - 1);
    CHECK(report["overall"]["lve"].get<double>() == doctest::Approx(sums[0] / n).epsilon(1e-9));
    CHECK(report["overall"]["mve"].get<double>() == doctest::Approx(sums[1] / n).epsilon(1e-9));
    CHECK(report["overall"]["dtw"].get<double>() == doctest::Approx(sums[2] / n).epsilon(1e-9));
    CHECK(report["overall"]["mod"].get<double>() == doctest::Approx(sums[3] / n).epsilon(1e-9));
    CHECK(report["overall"]["lve"].get<double>() > 0.0);
    CHECK(report["overall"]["mve"].get<double>() <= report["overall"]["lve"].get<double>());
}

TEST_CASE("export-mesh writes one OBJ per frame") {
    const fs::path d = test::temp_dir("cli_mesh");
    const MorphableModel model = test::small_model(20, 6, 16);
    save_model(model, d / "face.paf");
    Rng rng(5);
    Matrix expr = test::random_matrix(2, 16, rng);
    expr(0, 0) = 3.0F;
    expr(1, 1) = -2.0F;
    const std::vector<float> beta = test::random_vector(6, rng, 0.5);
    PafFile e;
    e.set("expressions", PafArray::from_matrix(expr));
    e.write(d / "expr.paf");
    PafFile b;
    b.set("beta", PafArray::from_vector(beta));
    b.write(d / "beta.paf");

    Run r = invoke({"export-mesh", "--expr", (d / "expr.paf").string(), "--beta", (d / "beta.paf").string(), "--model",
                 (d / "face.paf").string(), "--out", (d / "obj").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const MeshSeq want = expressions_to_meshes(model, beta, ExpressionSeq{expr, kMotionFps});
    for (std::size_t t = 0; t < 2; ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu.obj", t);
        const auto lines = lines_of(d / "obj" / name);
        std::size_t v = 0;
        for (const auto& line : lines) {
            if (line.rfind("v ", 0) != 0) {
                continue;
            }
            std::istringstream ss(line.substr(2));
            double x = 0;
            double y = 0;
            double z = 0;
            ss >> x >> y >> z;
            CHECK(std::abs(x - want.vertex(t, v)[0]) < 1e-6);
            CHECK(std::abs(y - want.vertex(t, v)[1]) < 1e-6);
            CHECK(std::abs(z - want.vertex(t, v)[2]) < 1e-6);
            ++v;
        }
        CHECK(v == 20);
    }
    CHECK(std::distance(fs::directory_iterator(d / "obj"), fs::directory_iterator{}) == 2);

    r = invoke({"export-mesh", "--expr", (d / "expr.paf").string(), "--model", (d / "face.paf").string(), "--format",
             "paf", "--clamp01", "--out", (d / "mesh.paf").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    Matrix clamped = expr;
    for (auto& x : clamped.data) {
        x = std::clamp(x, 0.0F, 1.0F);
    }
    const MeshSeq want_clamped =
        expressions_to_meshes(model, std::vector<float>(6, 0.0F), ExpressionSeq{clamped, kMotionFps});
    const PafFile mesh = PafFile::read(d / "mesh.paf");
    const PafArray& verts = mesh.get("vertices");
    CHECK(verts.dims == std::vector<std::uint32_t>{2, 20, 3});
    CHECK(test::max_abs_diff(verts.values, want_clamped.positions.data) < 1e-6);
}

TEST_CASE("export-embeddings writes one row per record") {
    const fs::path out = test::temp_dir("cli_embed") / "emb.csv";
    const Run r = invoke({"export-embeddings", "--manifest", (corpus() / "manifest.json").string(),
                       "--style-checkpoint", style_checkpoint().string(), "--out", out.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rows = lines_of(out);
    REQUIRE(rows.size() == 16);
    const auto header = split_csv(rows[0]);
    CHECK(header[0] == "id");
    CHECK(header[1] == "speaker");
    CHECK(header[2] == "language");
    CHECK(header.size() == 3 + 8 + 4);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(split_csv(rows[i]).size() == header.size());
    }
}

TEST_CASE("unit guidance weights reproduce the unguided sampler") {
    const fs::path d = test::temp_dir("cli_guidance");
    auto args = small_train_args(d / "ckpt.paf");
    args.insert(args.end(), {"--steps", "3"});
    Run r = invoke(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);

    const Manifest m = load_manifest(corpus() / "manifest.json");
    const fs::path sample = m.base_dir / m.records[0].audio_path;
    const fs::path ref = m.base_dir / m.records[1].expressions_path;
    const std::vector<std::string> common{"sample", "--checkpoint", (d / "ckpt.paf").string(), "--audio-feats",
                                          sample.string(), "--beta", sample.string(), "--t-hat", sample.string(),
                                          "--style-ref", ref.string(), "--seed", "9"};
    auto guided = common;
    guided.insert(guided.end(), {"--guidance", "1", "1", "--out", (d / "w11.paf").string()});
    auto plain = common;
    plain.insert(plain.end(), {"--no-guidance", "--out", (d / "plain.paf").string()});
    auto strong = common;
    strong.insert(strong.end(), {"--guidance", "2", "2", "--out", (d / "w22.paf").string()});
    REQUIRE(invoke(guided).code == 0);
    REQUIRE(invoke(plain).code == 0);
    REQUIRE(invoke(strong).code == 0);
    CHECK(test::file_bytes(d / "w11.paf") == test::file_bytes(d / "plain.paf"));
    CHECK(test::file_bytes(d / "w22.paf") != test::file_bytes(d / "plain.paf"));
    REQUIRE(invoke(guided).code == 0);
    CHECK(test::file_bytes(d / "w11.paf") == test::file_bytes(d / "plain.paf"));
}

TEST_CASE("config file values yield to command-line flags") {
    const fs::path d = test::temp_dir("cli_config");
    {
        std::ofstream toml(d / "run.toml");
        toml << "[train]\nsteps = 3\nlr = 0.002\n";
    }
    auto args = small_train_args(d / "a.paf");
    args.insert(args.end(), {"--config", (d / "run.toml").string(), "--log", (d / "a.csv").string()});
    Run r = invoke(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(lines_of(d / "a.csv").size() == 1 + 3);

    args = small_train_args(d / "b.paf");
    args.insert(args.end(),
                {"--config", (d / "run.toml").string(), "--steps", "2", "--log", (d / "b.csv").string()});
    r = invoke(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(lines_of(d / "b.csv").size() == 1 + 2);

    std::ifstream meta(d / "b.json");
    const auto j = nlohmann::json::parse(meta);
    CHECK(j["config"]["learning_rate"].get<double>() == doctest::Approx(0.002));
    CHECK(j["config"]["steps"].get<std::size_t>() == 2);
}

TEST_CASE("resume warns on changed settings") {
    const fs::path d = test::temp_dir("cli_resume");
    auto args = small_train_args(d / "ckpt.paf");
    args.insert(args.end(), {"--steps", "2"});
    REQUIRE(invoke(args).code == 0);
    auto again = small_train_args(d / "next.paf");
    again.insert(again.end(), {"--resume", (d / "ckpt.paf").string(), "--steps", "3", "--lr", "0.5"});
    const Run r = invoke(again);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.err.find("learning_rate") != std::string::npos);
    CHECK(r.err.find("steps") == std::string::npos);
    std::ifstream meta(d / "next.json");
    CHECK(nlohmann::json::parse(meta)["step"].get<std::size_t>() == 3);
}
