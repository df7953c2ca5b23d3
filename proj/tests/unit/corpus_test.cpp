#include <doctest.h>

#include <algorithm>
#include <map>

#include "fixtures.hpp"
#include "narrmap/error.hpp"

using namespace narrmap;

TEST_CASE("load_corpus sorts records by date and reassigns ids") {
  fixtures::TempDir dir;
  const auto path = dir / "c.jsonl";
  fixtures::write_text(path,
                       R"({"date":"2021-07-13","headline":"second","embedding":[1,0]})"
                       "\n"
                       R"({"date":"2021-07-12","headline":"first","embedding":[0,1]})"
                       "\n\n"
                       R"({"date":"2021-07-14T06:00:00Z","headline":"third","embedding":[1,1],"leaning":"left"})"
                       "\n");
  const auto c = load_corpus(path);
  REQUIRE(c.size() == 3);
  CHECK(c[0].headline == "first");
  CHECK(c[1].headline == "second");
  CHECK(c[2].headline == "third");
  for (std::size_t i = 0; i < 3; ++i) CHECK(c[i].id == i);
  CHECK(c[0].timestamp == doctest::Approx(0.0));
  CHECK(c[1].timestamp == doctest::Approx(1.0));
  CHECK(c[2].timestamp == doctest::Approx(2.25));
  CHECK(c[2].leaning == Leaning::left);
  CHECK(c.epoch == parse_datetime("2021-07-12"));
}

TEST_CASE("a record without an embedding is reported with its line number") {
  fixtures::TempDir dir;
  const auto path = dir / "bad.jsonl";
  fixtures::write_text(path,
                       R"({"date":"2021-07-12","headline":"a","embedding":[0,1]})"
                       "\n"
                       R"({"date":"2021-07-13","headline":"b"})"
                       "\n");
  try {
    load_corpus(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("embedding") != std::string::npos);
  }
}

TEST_CASE("missing corpus file raises not found") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/narrmap.jsonl"), NotFoundError);
}

TEST_CASE("a 160 record file loads with n = 160") {
  fixtures::TempDir dir;
  SyntheticSpec s;
  s.n = 160;
  save_corpus(generate_synthetic_corpus(s), dir / "c.jsonl");
  CHECK(load_corpus(dir / "c.jsonl").size() == 160);
}

TEST_CASE("save and load round trip preserves the canonical serialization") {
  fixtures::TempDir dir;
  SyntheticSpec s;
  s.n = 40;
  s.keyword_plants = {{"florida", 0.25}};
  const auto c = generate_synthetic_corpus(s);
  save_corpus(c, dir / "c.jsonl");
  const auto back = load_corpus(dir / "c.jsonl");
  CHECK(serialize_corpus(back) == serialize_corpus(c));
  CHECK(std::filesystem::exists(dir / "c.jsonl.manifest.json"));
}

TEST_CASE("manifest disagreeing with the records is rejected") {
  fixtures::TempDir dir;
  SyntheticSpec s;
  s.n = 10;
  save_corpus(generate_synthetic_corpus(s), dir / "c.jsonl");
  fixtures::write_text(dir / "c.jsonl.manifest.json", R"({"n": 11, "embedding_dim": 16})");
  CHECK_THROWS_AS(load_corpus(dir / "c.jsonl"), ValidationError);
}

TEST_CASE("synthetic generation is deterministic") {
  SyntheticSpec s;
  s.n = 200;
  s.topics = 4;
  s.seed = 7;
  CHECK(serialize_corpus(generate_synthetic_corpus(s)) == serialize_corpus(generate_synthetic_corpus(s)));
  auto other = s;
  other.seed = 8;
  CHECK(serialize_corpus(generate_synthetic_corpus(s)) != serialize_corpus(generate_synthetic_corpus(other)));
}

TEST_CASE("keyword plants hit exactly the requested fraction of headlines") {
  SyntheticSpec s;
  s.n = 100;
  s.keyword_plants = {{"florida", 0.2}};
  const auto c = generate_synthetic_corpus(s);
  const auto hits = std::count_if(c.documents.begin(), c.documents.end(), [](const Document& d) {
    std::string h = d.headline;
    std::transform(h.begin(), h.end(), h.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
    return h.find("florida") != std::string::npos;
  });
  CHECK(hits == 20);
}

TEST_CASE("zero noise collapses each topic to one embedding") {
  SyntheticSpec s;
  s.n = 60;
  s.noise_scale = 0.0;
  s.leaning_offset = 0.0;
  const auto c = generate_synthetic_corpus(s);
  std::map<std::string, std::vector<double>> by_topic;
  for (const auto& d : c.documents) {
    const auto topic = *std::find_if(d.keywords.begin(), d.keywords.end(),
                                     [](const std::string& k) { return k.rfind("topic-", 0) == 0; });
    auto [it, fresh] = by_topic.emplace(topic, d.embedding);
    if (!fresh) CHECK(it->second == d.embedding);
  }
  CHECK(by_topic.size() > 1);
}

TEST_CASE("validate_corpus") {
  auto good = fixtures::corpus_of({fixtures::doc(0, {1, 0}), fixtures::doc(1, {0, 1})});
  CHECK(validate_corpus(good).empty());

  SUBCASE("mismatched embedding dimension") {
    auto c = fixtures::corpus_of({fixtures::doc(0, std::vector<double>(384, 0.1)), fixtures::doc(1, std::vector<double>(383, 0.1))});
    const auto v = validate_corpus(c);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("dimension") != std::string::npos);
  }
  SUBCASE("decreasing timestamps") {
    auto c = fixtures::corpus_of({fixtures::doc(2, {1, 0}), fixtures::doc(1, {0, 1})});
    const auto v = validate_corpus(c);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("ordering") != std::string::npos);
  }
}

TEST_CASE("date parsing and formatting") {
  CHECK(parse_datetime("1970-01-02") == 86400);
  CHECK(parse_datetime("2021-07-11T00:00:00Z") == 1625961600);
  CHECK(format_datetime(1625961600 + 3661) == "2021-07-11T01:01:01Z");
  CHECK_THROWS_AS(parse_datetime("2021-02-30"), ParameterError);
  CHECK_THROWS_AS(parse_datetime("yesterday"), ParameterError);
}

TEST_CASE("keyword matching is case-insensitive over headline and keywords") {
  auto d = fixtures::doc(0, {1, 0}, Leaning::none, "Protests reach MIAMI");
  d.keywords = {"Florida"};
  CHECK(has_keyword(d, "miami"));
  CHECK(has_keyword(d, "florida"));
  CHECK_FALSE(has_keyword(d, "havana"));
}
