#include <doctest.h>

#include "polyglot/errors.hpp"
#include "polyglot/paf.hpp"
#include "test_support.hpp"

using namespace polyglot;

namespace {

PafFile sample_file(Rng& rng) {
    PafFile f;
    f.set("expressions", PafArray::from_matrix(test::random_matrix(7, 5, rng)));
    f.set("beta", PafArray::from_vector(test::random_vector(4, rng)));
    PafArray cube;
    cube.dims = {3, 4, 3};
    cube.values = test::random_vector(36, rng);
    f.set("vertices", cube);
    return f;
}

}  // namespace

TEST_CASE("encode and decode are bit exact") {
    Rng rng(1);
    const PafFile f = sample_file(rng);
    const auto bytes = f.encode();
    const PafFile back = PafFile::decode(bytes);
    CHECK(back == f);
    CHECK(back.encode() == bytes);
    CHECK(back.get("vertices").dims == std::vector<std::uint32_t>{3, 4, 3});
    CHECK(back.entries().front().first == "expressions");
}

TEST_CASE("file round trip preserves every bit") {
    Rng rng(2);
    PafFile f = sample_file(rng);
    PafArray special;
    special.dims = {4};
    special.values = {-0.0F, 1e-38F, std::numeric_limits<float>::max(), std::numeric_limits<float>::infinity()};
    f.set("special", special);
    const auto path = test::temp_dir("paf_io") / "a.paf";
    f.write(path);
    CHECK(PafFile::read(path) == f);
}

TEST_CASE("header layout is little-endian u32") {
    PafFile f;
    f.set("x", PafArray::from_vector(std::vector<float>{1.0F}));
    const auto b = f.encode();
    REQUIRE(b.size() == 4 + 4 + 4 + 1 + 4 + 4 + 4 + 4);
    CHECK(std::string(b.begin(), b.begin() + 4) == "PAF1");
    CHECK(b[4] == 1);  // entry count
    CHECK(b[8] == 1);  // name length
    CHECK(b[12] == 'x');
    CHECK(b[13] == 1);  // dtype float32
    CHECK(b[17] == 1);  // rank
    CHECK(b[21] == 1);  // dims[0]
    CHECK(b[28] == 0x3F);  // 1.0f = 0x3F800000
}

TEST_CASE("corruption raises a typed error with the offset") {
    Rng rng(3);
    auto bytes = sample_file(rng).encode();
    auto flipped = bytes;
    flipped[0] ^= 0xFF;
    try {
        (void)PafFile::decode(flipped);
        FAIL("expected PafError");
    } catch (const PafError& e) {
        CHECK(e.offset() == 0);
    }
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS((void)PafFile::decode(truncated), PafError);
    for (std::size_t cut : {std::size_t{2}, std::size_t{6}, std::size_t{11}, std::size_t{20}}) {
        auto partial = bytes;
        partial.resize(cut);
        CHECK_THROWS_AS((void)PafFile::decode(partial), PafError);
    }
    auto bad_dtype = bytes;
    const std::size_t dtype_pos = 8 + 4 + std::string("expressions").size();
    bad_dtype[dtype_pos] = 7;
    try {
        (void)PafFile::decode(bad_dtype);
        FAIL("expected PafError");
    } catch (const PafError& e) {
        CHECK(e.offset() == dtype_pos);
    }
}

TEST_CASE("entry names are unique") {
    PafFile f;
    f.set("a", PafArray::from_vector(std::vector<float>{1.0F}));
    f.set("a", PafArray::from_vector(std::vector<float>{2.0F, 3.0F}));
    CHECK(f.entries().size() == 1);
    CHECK(f.get("a").values.size() == 2);
    CHECK_THROWS_AS((void)f.get("missing"), DataError);

    // a duplicate written by hand is rejected on decode
    auto bytes = f.encode();
    std::vector<std::uint8_t> twice(bytes.begin(), bytes.begin() + 8);
    twice[4] = 2;
    twice.insert(twice.end(), bytes.begin() + 8, bytes.end());
    twice.insert(twice.end(), bytes.begin() + 8, bytes.end());
    CHECK_THROWS_AS((void)PafFile::decode(twice), PafError);
}

TEST_CASE("missing files are data errors") {
    CHECK_THROWS_AS((void)PafFile::read("/nonexistent/dir/x.paf"), DataError);
}
