#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <marg/tokens.hpp>

#include "test_util.hpp"

using marg::count_tokens;

TEST_CASE("count_tokens: empty text is zero") { CHECK(count_tokens("") == 0); }

TEST_CASE("count_tokens: whitespace only is zero") {
    CHECK(count_tokens("   \n\t  ") == 0);
}

TEST_CASE("count_tokens: simple words and punctuation") {
    CHECK(count_tokens("tok") == 1);
    CHECK(count_tokens("tok tok tok") == 3);
    CHECK(count_tokens("Hello, world!") == 4);  // Hello , world !
    CHECK(count_tokens("12345") == 2);          // digit groups of three
}

TEST_CASE("count_tokens: long words cost extra") {
    CHECK(count_tokens("abcdefghijkl") == 1);        // 12 letters
    CHECK(count_tokens("abcdefghijklm") == 2);       // 13 letters
    CHECK(count_tokens(std::string(26, 'a')) == 3);  // 12 + 7 + 7
}

namespace {

std::string random_text(std::mt19937_64& rng, int len) {
    static const char alphabet[] = "abcdefghij XYZ012.,;!?-\n\t'\"(){}";
    std::string out;
    out.reserve(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) {
        out.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
    }
    return out;
}

}  // namespace

TEST_CASE("count_tokens: concatenation bounds hold on random strings") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const std::string a = random_text(rng, static_cast<int>(rng() % 60));
        const std::string b = random_text(rng, static_cast<int>(rng() % 60));
        const int ca = count_tokens(a);
        const int cb = count_tokens(b);
        const int cab = count_tokens(a + b);
        CAPTURE(a);
        CAPTURE(b);
        CHECK(cab <= ca + cb + 1);
        CHECK(cab >= std::max(ca, cb));
    }
}

TEST_CASE("count_tokens: extension never shrinks the count") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const std::string t = random_text(rng, static_cast<int>(rng() % 80));
        CHECK(count_tokens(t + t) >= count_tokens(t));
    }
}

TEST_CASE("count_tokens: calibration against the exact-tokenizer reference passage") {
    // The fixture passage measures exactly 4096 tokens under the reference
    // BPE tokenizer for the default model; the approximation must land
    // within +/-10%.
    std::ifstream in(marg::test::fixture_path("reference_passage_4096.txt"), std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    const int approx = count_tokens(buf.str());
    CHECK(approx >= 4096 * 0.9);
    CHECK(approx <= 4096 * 1.1);
}

TEST_CASE("count_tokens: pure function, stable across calls") {
    const std::string t = "The gamma benchmark shows 12.5% improvement (p < 0.05).";
    CHECK(count_tokens(t) == count_tokens(t));
}
