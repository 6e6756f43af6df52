#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "relaylab/io.hpp"
#include "test_util.hpp"

using namespace relaylab;
namespace tu = relaylab::testutil;

TEST_SUITE("io") {

TEST_CASE("scheme params round-trip through their JSON form") {
    Rng rng(61);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const NewSchemeParams p = tu::random_new_params(ch, rng);
    const NewSchemeParams back = load_scheme_params(ch, serialize_scheme_params(p));
    for (size_t i = 0; i < p.input_chain.probs().size(); ++i)
        CHECK(back.input_chain.probs()[i] == p.input_chain.probs()[i]);
    for (size_t i = 0; i < p.compressor.probs().size(); ++i)
        CHECK(back.compressor.probs()[i] == p.compressor.probs()[i]);

    const CafParams cp = tu::random_caf_params(ch, rng);
    const CafParams cback = load_caf_params(ch, serialize_caf_params(cp));
    for (size_t i = 0; i < cp.input_law.size(); ++i) CHECK(cback.input_law[i] == cp.input_law[i]);
    CHECK(params_text_is_caf(serialize_caf_params(cp)));
    CHECK_FALSE(params_text_is_caf(serialize_scheme_params(p)));
}

TEST_CASE("params parse errors") {
    Rng rng(62);
    const RelayChannel ch = tu::random_binary_channel(rng);
    CHECK_THROWS_AS((void)load_scheme_params(ch, "{"), ParseError);
    CHECK_THROWS_AS((void)load_scheme_params(ch, "{\"yhat_size\": 2}"), ParseError);
    // Wrong shape: relay_map rows do not match the yhat size.
    CHECK_THROWS_AS((void)load_scheme_params(ch, R"({
        "yhat_size": 2,
        "input_chain": [[0.5,0.5],[0.5,0.5]],
        "relay_map": [[0.5,0.5]],
        "compressor": [[[1,0],[1,0]],[[1,0],[1,0]]]
    })"),
                    Error);
    // Row off stochasticity.
    CHECK_THROWS_AS((void)load_scheme_params(ch, R"({
        "yhat_size": 2,
        "input_chain": [[0.6,0.5],[0.5,0.5]],
        "relay_map": [[0.5,0.5],[0.5,0.5]],
        "compressor": [[[1,0],[1,0]],[[1,0],[1,0]]]
    })"),
                    ValidationError);
}

TEST_CASE("json emitter is deterministic and prints full precision") {
    JsonValue a = JsonValue::object();
    a.set("x", 0.1);
    a.set("y", 1.0 / 3.0);
    a.set("s", "he\"llo");
    a.set("list", [] {
        JsonValue arr = JsonValue::array();
        arr.push(1);
        arr.push(true);
        arr.push(nullptr);
        return arr;
    }());
    const std::string once = a.dump(2);
    const std::string twice = a.dump(2);
    CHECK(once == twice);
    CHECK(once.find("0.10000000000000001") != std::string::npos);
    CHECK(once.find("0.33333333333333331") != std::string::npos);
    CHECK(once.find("\\\"") != std::string::npos);

    // Round trip through the printed representation preserves the double.
    CHECK(std::stod(format_double(0.1)) == 0.1);
    CHECK(std::stod(format_double(1e-300)) == 1e-300);
}

TEST_CASE("fnv hash is stable and recomputable") {
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a64_hex("hello") == fnv1a64_hex("hello"));
    CHECK(fnv1a64_hex("hello") != fnv1a64_hex("hellp"));
}

TEST_CASE("csv append writes a header exactly once") {
    const std::string path = (std::filesystem::temp_directory_path() / "relaylab_io_test.csv").string();
    std::error_code ec;
    std::filesystem::remove(path, ec);
    append_csv_line(path, "a,b", "1,2");
    append_csv_line(path, "a,b", "3,4");
    std::ifstream in(path);
    std::string l1, l2, l3;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    CHECK(l1 == "a,b");
    CHECK(l2 == "1,2");
    CHECK(l3 == "3,4");
    std::filesystem::remove(path, ec);
}

}  // TEST_SUITE
