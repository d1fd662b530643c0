#include <doctest.h>

#include <sstream>

#include "test_util.hpp"
#include "textseg/embeddings.hpp"

using namespace textseg;
using testutil::error_code;

namespace {

EmbeddingTable parse(const std::string& text, OovPolicy policy = OovPolicy::Zeros) {
  std::istringstream in(text);
  return load_vectors(in, policy);
}

std::vector<double> vec(const Eigen::Map<const Vector>& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("loading vectors") {
  const auto t = parse("2 3\na 1 0 0\nb 0 1 0\n");
  CHECK(t.size() == 2);
  CHECK(t.dim() == 3);
  CHECK(vec(t.lookup("a")) == std::vector<double>{1, 0, 0});
  CHECK(vec(t.lookup("b")) == std::vector<double>{0, 1, 0});
  CHECK(t.tokens() == std::vector<std::string>{"a", "b"});

  const auto empty = parse("0 3\n");
  CHECK(empty.size() == 0);
  CHECK(vec(empty.lookup("anything")) == std::vector<double>{0, 0, 0});

  // Trailing whitespace and CRLF line endings are tolerated.
  const auto crlf = parse("1 2\r\nx 0.5 -2  \r\n");
  CHECK(vec(crlf.lookup("x")) == std::vector<double>{0.5, -2});
}

TEST_CASE("loader errors") {
  CHECK(error_code([] { parse("2 3\na 1 0 0\nc 1 0\n"); }) == "DimensionMismatch");
  CHECK(error_code([] { parse(""); }) == "BadHeader");
  CHECK(error_code([] { parse("three 3\n"); }) == "BadHeader");
  CHECK(error_code([] { parse("1 0\n"); }) == "BadHeader");
  CHECK(error_code([] { parse("1 2\na nan 0\n"); }) == "NonFiniteValue");
  CHECK(error_code([] { parse("1 2\na inf 0\n"); }) == "NonFiniteValue");
  CHECK(error_code([] { parse("2 2\na 1 0\na 0 1\n"); }) == "DuplicateToken");
  CHECK(error_code([] { parse("3 2\na 1 0\n"); }) == "CountMismatch");
  CHECK(error_code([] { parse("1 2\na 1 zero\n"); }) == "BadValue");
  CHECK(error_code([] { load_vectors_file("/nonexistent/vectors.txt"); }) == "Unreadable");
}

TEST_CASE("lookup fallbacks") {
  const auto t = parse("2 3\na 1 0 0\nB 0 1 0\n");
  CHECK(vec(t.lookup("A")) == std::vector<double>{1, 0, 0});
  CHECK(vec(t.lookup("B")) == std::vector<double>{0, 1, 0});
  // Only the query is lowercased.
  CHECK(vec(t.lookup("b")) == std::vector<double>{0, 0, 0});
  CHECK(vec(t.lookup("zzz")) == std::vector<double>{0, 0, 0});
  CHECK(t.contains("a"));
  CHECK_FALSE(t.contains("A"));
}

TEST_CASE("mean OOV policy") {
  const auto t = parse("2 2\na 1 3\nb 3 -1\n", OovPolicy::Mean);
  CHECK(vec(t.lookup("zzz")) == std::vector<double>{2, 1});
  CHECK(vec(parse("0 2\n", OovPolicy::Mean).unk()) == std::vector<double>{0, 0});
  CHECK(oov_policy_from_string("mean") == OovPolicy::Mean);
  CHECK(oov_policy_from_string("zeros") == OovPolicy::Zeros);
  CHECK(error_code([] { oov_policy_from_string("random"); }) == "BadOovPolicy");
}

TEST_CASE("lookup is total and finite") {
  const auto t = parse("3 4\nthe 0.1 0.2 0.3 0.4\nCat -1 2 -3 4\ndog 1e-3 2e3 0 -0\n", OovPolicy::Mean);
  const char* queries[] = {"the", "THE", "cat", "Cat", "dog", "Dog", "", "!", "unknown"};
  for (const char* q : queries) {
    const auto v = t.lookup(q);
    CHECK(v.size() == 4);
    CHECK(v.allFinite());
  }
}

TEST_CASE("serialize round-trip") {
  Rng rng(12);
  EmbeddingTable t(5);
  for (int i = 0; i < 40; ++i) {
    std::vector<double> v(5);
    for (auto& x : v) x = rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.uniform(-20, 5));
    t.add("tok" + std::to_string(i), v);
  }
  t.finalize();
  const auto text = serialize_vectors(t);
  const auto back = parse(text);
  CHECK(back == t);
  CHECK(serialize_vectors(back) == text);
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("The cat sat.") == std::vector<std::string>{"The", "cat", "sat", "."});
  CHECK(tokenize("e.g. this") == std::vector<std::string>{"e.g.", "this"});
  CHECK(tokenize("   ").empty());
  CHECK(tokenize("\"Hello,\" she said (twice)!") ==
        std::vector<std::string>{"\"", "Hello", ",", "\"", "she", "said", "(", "twice", ")", "!"});
  CHECK(tokenize("Dr. Who") == std::vector<std::string>{"Dr.", "Who"});
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("...") == std::vector<std::string>{".", ".", "."});
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::string s;
    const auto len = rng.uniform_int(1, 20);
    for (std::uint64_t i = 0; i < len; ++i) s += "ab .,!x\""[rng.uniform_int(0, 7)];
    const bool blank = s.find_first_not_of(' ') == std::string::npos;
    CHECK(tokenize(s).empty() == blank);
  }
}

TEST_CASE("embedding sentences") {
  const auto t = parse("2 3\na 1 0 0\nb 0 1 0\n");
  const Tensor2 m = embed_sentence({"a", "b"}, t);
  Tensor2 expected(2, 3);
  expected << 1, 0, 0, 0, 1, 0;
  CHECK(m == expected);
  CHECK(embed_sentence({"A"}, t) == Tensor2(expected.topRows(1)));
  CHECK(embed_sentence({"zzz"}, t).isZero(0.0));
  const Tensor2 empty = embed_sentence({}, t);
  CHECK(empty.rows() == 1);
  CHECK(empty.isZero(0.0));
  for (std::size_t n = 0; n < 6; ++n) {
    CHECK(embed_sentence(std::vector<std::string>(n, "a"), t).rows() == static_cast<Index>(std::max<std::size_t>(1, n)));
  }
}
