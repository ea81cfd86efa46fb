#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "halfwave/io.hpp"
#include "halfwave/spectral.hpp"
#include "test_common.hpp"

using namespace hw;

TEST_CASE("field serialization round-trips bit exactly") {
    auto g = make_grid(16.0, 1 << 8);
    std::mt19937_64 rng(41);
    std::normal_distribution<double> nd;
    GridFunction f(g, FieldKind::Complex);
    for (int j = 0; j < f.size(); ++j) f[j] = cplx(nd(rng), nd(rng));

    json j = to_json(f, json{{"t", -0.25}});
    GridFunction back = from_json(j);
    REQUIRE(back.grid().half_width() == f.grid().half_width());
    REQUIRE(back.size() == f.size());
    REQUIRE(std::memcmp(back.values().data(), f.values().data(), sizeof(cplx) * f.size()) == 0);
    REQUIRE(j.at("t").get<double>() == -0.25);
}

TEST_CASE("field files round-trip through disk") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "hw_io_test";
    fs::create_directories(dir);
    auto g = make_grid(8.0, 1 << 8);
    GridFunction f = sample(g, [](double x) { return std::exp(-x * x); });
    const std::string path = (dir / "f.json").string();
    save_field(f, path, json{{"label", "gauss"}});
    json extra;
    GridFunction back = load_field(path, &extra);
    REQUIRE(extra.at("label") == "gauss");
    back -= f;
    REQUIRE(norm2(back) == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("csv output is deterministic") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "hw_io_csv";
    fs::create_directories(dir);
    auto write = [&](const std::string& name) {
        CsvWriter w((dir / name).string(), {"a", "b"});
        w.row({1.0 / 3.0, -0.1234567890123456789});
        w.row({2.99792458e8, 1e-300});
    };
    write("one.csv");
    write("two.csv");
    std::ifstream f1(dir / "one.csv"), f2(dir / "two.csv");
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    REQUIRE(s1 == s2);
    REQUIRE(s1.find("a,b\n") == 0);
    fs::remove_all(dir);
}

TEST_CASE("malformed payloads are rejected") {
    auto g = make_grid(8.0, 1 << 8);
    GridFunction f(g);
    json j = to_json(f);
    j["data"] = "not base64 at all!!!";
    REQUIRE_THROWS_AS(from_json(j), IoError);
    json j2 = to_json(f);
    j2["N"] = 100;
    REQUIRE_THROWS_AS(from_json(j2), IoError);
}
