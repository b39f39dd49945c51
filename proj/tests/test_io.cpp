#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "odeco/io.hpp"
#include "odeco/noise.hpp"
#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"

using namespace odeco;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("tensor binary container round-trips bit-exactly") {
    Rng rng(44);
    DenseTensor t({3, 4, 2});
    for (double& x : t.data) x = rng.gaussian();
    t.data[0] = -0.0;
    t.data[1] = 1e-310;  // subnormal survives
    const std::string bytes = encode_tensor(t);
    REQUIRE(bytes.substr(0, 4) == "ODCT");
    DenseTensor back = decode_tensor(bytes);
    REQUIRE(back.dims == t.dims);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        REQUIRE(std::memcmp(&back.data[i], &t.data[i], sizeof(double)) == 0);
    }
    // encoding is deterministic
    REQUIRE(encode_tensor(t) == bytes);

    const auto path = temp_file("odeco_roundtrip.odct");
    write_tensor(path.string(), t);
    DenseTensor from_disk = read_tensor(path.string());
    REQUIRE(from_disk.data == t.data);
    std::filesystem::remove(path);
}

TEST_CASE("tensor decode rejects malformed input") {
    DenseTensor t({2, 2});
    std::string bytes = encode_tensor(t);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    REQUIRE_THROWS_AS(decode_tensor(bad_magic), std::invalid_argument);
    std::string truncated = bytes.substr(0, bytes.size() - 3);
    REQUIRE_THROWS_AS(decode_tensor(truncated), std::invalid_argument);
}

TEST_CASE("tensor JSON debug format round-trips") {
    DenseTensor t({2, 3, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    json j = tensor_to_json(t);
    REQUIRE(j["dims"] == json(std::vector<int>{2, 3, 2}));
    // first index outermost: data[i1][i2][i3]
    REQUIRE(j["data"][0][0][0] == 1.0);
    REQUIRE(j["data"][1][0][0] == 2.0);
    REQUIRE(j["data"][0][1][0] == 3.0);
    DenseTensor back = tensor_from_json(j);
    REQUIRE(back.data == t.data);
}

TEST_CASE("decomposition JSON round-trips and validates") {
    OdecoDecomposition dec = random_odeco({5, 4, 6}, 3, LambdaSpec::geometric(2.0, 0.5), 77);
    json j = decomposition_to_json(dec);
    OdecoDecomposition back = decomposition_from_json(j);
    REQUIRE(back.lambdas == dec.lambdas);
    for (int q = 0; q < 3; ++q)
        REQUIRE(back.factors[static_cast<std::size_t>(q)].data == dec.factors[static_cast<std::size_t>(q)].data);

    json broken = j;
    broken["lambdas"] = std::vector<double>{1.0};  // wrong count
    REQUIRE_THROWS(decomposition_from_json(broken));
}

TEST_CASE("estimate JSON carries traces only when asked") {
    OdecoDecomposition truth = random_odeco({5, 5, 5}, 2, LambdaSpec::equal(2.0), 3);
    DenseTensor t = synthesize(truth);
    EstimatedDecomposition est = noiseless_decompose(t, 2, {}, 4);
    json lean = estimate_to_json(est, t.dims, false);
    REQUIRE_FALSE(lean.contains("traces"));
    json full = estimate_to_json(est, t.dims, true);
    REQUIRE(full.contains("traces"));
    REQUIRE(full["traces"].size() == 2);
    REQUIRE(full["r"] == 2);
}

TEST_CASE("tensor JSON rejects ragged nesting") {
    json j = {{"dims", {2, 2}}, {"data", {{1.0, 2.0}, {3.0}}}};
    REQUIRE_THROWS_AS(tensor_from_json(j), std::invalid_argument);
}
