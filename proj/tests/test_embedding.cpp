#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <fstream>

#include "groundkit/embedding.hpp"
#include "groundkit/text.hpp"
#include "helpers.hpp"

using namespace groundkit;

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("hash provider is deterministic and unit-norm") {
  HashEmbeddingProvider provider(64);
  CHECK(provider.dimension() == 64);
  CHECK(provider.name() == "hash-fallback");

  auto a = provider.embed("coffee table");
  auto b = provider.embed("coffee table");
  CHECK(a == b);
  CHECK(a.size() == 64);
  CHECK(std::abs(norm2(a) - 1.0) < 1e-6);

  auto other = provider.embed("garden hose");
  CHECK(a != other);
  CHECK(std::abs(norm2(other) - 1.0) < 1e-6);
}

TEST_CASE("hash provider handles degenerate text") {
  HashEmbeddingProvider provider(8);
  auto empty = provider.embed("");
  CHECK(std::abs(norm2(empty) - 1.0) < 1e-6);
  auto punct = provider.embed("?!.");
  CHECK(punct == empty);
}

TEST_CASE("identical phrases embed identically across provider instances") {
  HashEmbeddingProvider p1(32), p2(32);
  CHECK(p1.embed("tall lamp") == p2.embed("tall lamp"));
  CHECK(cosine_similarity(p1.embed("tall lamp"), p2.embed("tall lamp")) == 1.0);
}

TEST_CASE("embedding file round-trips and renormalizes") {
  testutil::TempDir dir("emb");
  std::string path = dir.file("vectors.emb");

  write_embedding_file(path, 3,
                       {{"alpha", {2.0f, 0.0f, 0.0f}},
                        {"beta", {0.0f, 5.0f, 0.0f}},
                        {"gamma mixed", {1.0f, 1.0f, 1.0f}}});

  FileEmbeddingProvider provider(path);
  CHECK(provider.dimension() == 3);
  CHECK(provider.name() == "file:" + path);

  auto alpha = provider.embed("alpha");
  CHECK(std::abs(alpha[0] - 1.0) < 1e-6);
  CHECK(std::abs(norm2(provider.embed("beta")) - 1.0) < 1e-6);
  CHECK(std::abs(norm2(provider.embed("gamma mixed")) - 1.0) < 1e-6);
  CHECK(std::abs(cosine_similarity(alpha, provider.embed("beta"))) < 1e-12);

  CHECK_THROWS_AS(provider.embed("unknown phrase"), EmbeddingError);
}

TEST_CASE("embedding file format is the documented EMB1 layout") {
  testutil::TempDir dir("emb_layout");
  std::string path = dir.file("one.emb");
  write_embedding_file(path, 2, {{"hi", {1.0f, 0.0f}}});

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  // magic + u32 dim + u32 count + u16 keylen + "hi" + 2 x f32.
  REQUIRE(bytes.size() == 4 + 4 + 4 + 2 + 2 + 8);
  CHECK(bytes.substr(0, 4) == "EMB1");
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);  // dim, little-endian
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);  // count
  CHECK(static_cast<unsigned char>(bytes[12]) == 2); // key length
  CHECK(bytes.substr(14, 2) == "hi");
}

TEST_CASE("corrupt embedding files are rejected") {
  testutil::TempDir dir("emb_bad");
  std::string path = dir.file("bad.emb");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_AS(FileEmbeddingProvider(path), IoError);
  CHECK_THROWS_AS(FileEmbeddingProvider(dir.file("missing.emb")), IoError);
}
