// SPDX-License-Identifier: Apache-2.0
#include "narrmap/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "narrmap/error.hpp"

namespace narrmap {

using nlohmann::json;

std::string_view to_string(Leaning l) noexcept {
  switch (l) {
    case Leaning::left: return "left";
    case Leaning::center: return "center";
    case Leaning::right: return "right";
    case Leaning::none: return "none";
  }
  return "none";
}

Leaning parse_leaning(std::string_view s) {
  if (s == "left") return Leaning::left;
  if (s == "center") return Leaning::center;
  if (s == "right") return Leaning::right;
  if (s == "none") return Leaning::none;
  throw ParameterError("unknown leaning '" + std::string(s) + "'");
}

std::string format_datetime(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{unix_seconds}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(hms.hours().count()),
                int(hms.minutes().count()), int(hms.seconds().count()));
  return buf;
}

std::int64_t parse_datetime(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const std::string str(text);
  int consumed = 0;
  if (std::sscanf(str.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3 || consumed != 10)
    throw ParameterError("bad date '" + str + "'");
  std::string_view rest = text.substr(10);
  if (!rest.empty()) {
    int used = 0;
    const std::string tail(rest);
    if (std::sscanf(tail.c_str(), "T%2d:%2d:%2d%n", &h, &mi, &s, &used) != 3 || used != 9)
      throw ParameterError("bad time in '" + str + "'");
    rest = rest.substr(9);
    if (rest == "Z") rest = {};
    if (!rest.empty()) throw ParameterError("trailing characters in '" + str + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw ParameterError("invalid date '" + str + "'");
  return sys_days{ymd}.time_since_epoch().count() * 86400LL + h * 3600LL + mi * 60LL + s;
}

namespace {

struct RawRecord {
  std::int64_t seconds;
  Document doc;
};

RawRecord parse_record(const std::string& line, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(lineno, "record is not an object");
  auto need = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(lineno, std::string("missing field '") + key + "'");
    return *it;
  };
  RawRecord r;
  try {
    r.seconds = parse_datetime(need("date").get<std::string>());
    r.doc.headline = need("headline").get<std::string>();
    r.doc.body = j.value("body", std::string());
    r.doc.source = j.value("source", std::string());
    r.doc.leaning = parse_leaning(j.value("leaning", std::string("none")));
    if (auto it = j.find("keywords"); it != j.end())
      r.doc.keywords = it->get<std::vector<std::string>>();
    r.doc.embedding = need("embedding").get<std::vector<double>>();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(lineno, e.what());
  }
  if (r.doc.embedding.empty()) throw ParseError(lineno, "empty embedding");
  return r;
}

json manifest_json(const Corpus& c) {
  return json{{"format", "narrmap-corpus"},
              {"version", 1},
              {"n", c.size()},
              {"embedding_dim", c.embedding_dim},
              {"epoch", format_datetime(c.epoch)}};
}

std::filesystem::path manifest_path(const std::filesystem::path& p) {
  return std::filesystem::path(p.string() + ".manifest.json");
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

Corpus parse_corpus(std::istream& in, const std::string& origin) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    RawRecord r = parse_record(line, lineno);
    if (records.empty()) {
      dim = r.doc.embedding.size();
    } else if (r.doc.embedding.size() != dim) {
      throw ParseError(lineno, "embedding dimension " + std::to_string(r.doc.embedding.size()) +
                                   " differs from " + std::to_string(dim));
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ValidationError("corpus " + origin + " is empty");

  std::stable_sort(records.begin(), records.end(),
                   [](const RawRecord& a, const RawRecord& b) { return a.seconds < b.seconds; });
  Corpus c;
  c.epoch = records.front().seconds;
  c.embedding_dim = dim;
  c.documents.reserve(records.size());
  for (auto& r : records) {
    r.doc.id = c.documents.size();
    r.doc.timestamp = double(r.seconds - c.epoch) / 86400.0;
    c.documents.push_back(std::move(r.doc));
  }
  return c;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open corpus file " + path.string());
  Corpus c = parse_corpus(in, path.string());
  const auto dim = c.embedding_dim;
  const auto mpath = manifest_path(path);
  if (std::filesystem::exists(mpath)) {
    std::ifstream min(mpath);
    json m;
    try {
      m = json::parse(min);
    } catch (const json::exception& e) {
      throw ValidationError("unreadable manifest " + mpath.string() + ": " + e.what());
    }
    if (m.value("n", c.size()) != c.size())
      throw ValidationError("manifest n does not match record count");
    if (m.value("embedding_dim", dim) != dim)
      throw ValidationError("manifest embedding_dim does not match records");
  }
  if (auto v = validate_corpus(c); !v.empty()) throw ValidationError(v.front());
  return c;
}

std::string serialize_corpus(const Corpus& c) {
  std::string out;
  for (const auto& d : c.documents) {
    const auto secs = c.epoch + std::llround(d.timestamp * 86400.0);
    json j{{"id", d.id},
           {"date", format_datetime(secs)},
           {"headline", d.headline},
           {"body", d.body},
           {"source", d.source},
           {"leaning", to_string(d.leaning)},
           {"keywords", d.keywords},
           {"embedding", d.embedding}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& c, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize_corpus(c);
  }
  std::ofstream m(manifest_path(path), std::ios::binary);
  m << manifest_json(c).dump(2) << '\n';
}

std::vector<std::string> validate_corpus(const Corpus& c) {
  std::vector<std::string> v;
  if (c.documents.empty()) {
    v.emplace_back("corpus is empty");
    return v;
  }
  if (c.embedding_dim < 2) v.emplace_back("embedding dimension must be at least 2");
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& d = c.documents[i];
    const std::string at = "document " + std::to_string(i) + ": ";
    if (d.id != i) v.push_back(at + "id " + std::to_string(d.id) + " out of sequence");
    if (!std::isfinite(d.timestamp)) v.push_back(at + "non-finite timestamp");
    if (i > 0 && d.timestamp < c.documents[i - 1].timestamp)
      v.push_back(at + "timestamp decreases (ordering violation)");
    if (d.embedding.size() != c.embedding_dim)
      v.push_back(at + "embedding dimension " + std::to_string(d.embedding.size()) +
                  " differs from " + std::to_string(c.embedding_dim));
    if (!std::all_of(d.embedding.begin(), d.embedding.end(), [](double x) { return std::isfinite(x); }))
      v.push_back(at + "non-finite embedding entry");
  }
  return v;
}

bool has_keyword(const Document& doc, std::string_view tag) {
  const std::string t = lower(tag);
  if (lower(doc.headline).find(t) != std::string::npos) return true;
  return std::any_of(doc.keywords.begin(), doc.keywords.end(),
                     [&](const std::string& k) { return lower(k).find(t) != std::string::npos; });
}

namespace {

constexpr std::array<std::string_view, 40> kVocabulary = {
    "council", "vote",    "market",  "talks",   "report",   "crowd",   "minister", "border",
    "protest", "energy",  "tariff",  "court",   "harbor",   "summit",  "budget",   "strike",
    "rally",   "sanction", "leaders", "network", "shortage", "airport", "mayor",    "envoy",
    "inquiry", "harvest", "bridge",  "storm",   "campaign", "reform",  "union",    "supply",
    "treaty",  "clinic",  "embassy", "ferry",   "ruling",   "archive", "festival", "census"};

constexpr std::array<std::string_view, 10> kVerbs = {"signals", "weighs", "faces", "rejects", "backs",
                                                     "delays",  "probes", "eyes",  "opens",   "ends"};

const std::array<std::array<std::string_view, 3>, 4> kSources = {{
    {"Harbor Ledger", "Civic Wire", "Metro Voice"},
    {"Wire Service", "Daily Record", "Global Desk"},
    {"Liberty Post", "Heritage Times", "Frontier News"},
    {"Press Office", "Press Office", "Press Office"},
}};

std::vector<double> unit_vector(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = g(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

bool contains_any_tag(std::string_view word, const std::vector<KeywordPlant>& plants) {
  const std::string w = lower(word);
  return std::any_of(plants.begin(), plants.end(), [&](const KeywordPlant& p) {
    return !p.tag.empty() && w.find(lower(p.tag)) != std::string::npos;
  });
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.n < 10) throw ParameterError("synthetic corpus needs n >= 10");
  if (spec.topics < 2) throw ParameterError("synthetic corpus needs at least 2 topics");
  if (spec.embedding_dim < 2) throw ParameterError("embedding dimension must be at least 2");
  if (!(spec.time_span_days >= 0.0) || !(spec.noise_scale >= 0.0))
    throw ParameterError("time span and noise scale must be non-negative");
  const double mix_sum = spec.leaning_mix[0] + spec.leaning_mix[1] + spec.leaning_mix[2];
  for (double p : spec.leaning_mix)
    if (p < 0.0) throw ParameterError("leaning mix entries must be non-negative");
  if (!(mix_sum > 0.0)) throw ParameterError("leaning mix must have positive mass");
  for (const auto& kp : spec.keyword_plants) {
    if (kp.tag.empty()) throw ParameterError("keyword plant with empty tag");
    if (!(kp.fraction >= 0.0 && kp.fraction <= 1.0))
      throw ParameterError("keyword plant fraction outside [0,1]");
  }

  std::mt19937_64 rng(spec.seed);
  const std::size_t d = spec.embedding_dim;
  std::vector<std::vector<double>> centroids;
  for (std::size_t t = 0; t < spec.topics; ++t) centroids.push_back(unit_vector(rng, d));
  const auto lean_dir = unit_vector(rng, d);
  std::vector<std::vector<double>> tag_dirs;
  for (std::size_t p = 0; p < spec.keyword_plants.size(); ++p) tag_dirs.push_back(unit_vector(rng, d));

  std::vector<std::string_view> vocab;
  for (auto w : kVocabulary)
    if (!contains_any_tag(w, spec.keyword_plants)) vocab.push_back(w);
  std::vector<std::string_view> verbs;
  for (auto w : kVerbs)
    if (!contains_any_tag(w, spec.keyword_plants)) verbs.push_back(w);
  if (vocab.size() < 4 || verbs.empty()) throw ParameterError("keyword tags collide with the vocabulary");

  const double coord_sd = spec.noise_scale / std::sqrt(double(d));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<int> lean_pick({spec.leaning_mix[0], spec.leaning_mix[1], spec.leaning_mix[2]});
  const auto span_seconds = std::llround(spec.time_span_days * 86400.0);

  struct Draft {
    std::int64_t seconds;
    std::size_t topic;
    Document doc;
  };
  std::vector<Draft> drafts(spec.n);
  for (auto& dr : drafts) {
    dr.topic = std::size_t(rng() % spec.topics);
    dr.seconds = std::llround(unit(rng) * double(span_seconds));
    const int li = lean_pick(rng);
    dr.doc.leaning = li == 0 ? Leaning::left : li == 1 ? Leaning::center : Leaning::right;
    const auto& pool = kSources[std::size_t(li)];
    dr.doc.source = std::string(pool[rng() % pool.size()]);
    dr.doc.embedding.resize(d);
    const double lsign = dr.doc.leaning == Leaning::left ? 1.0 : dr.doc.leaning == Leaning::right ? -1.0 : 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double eps = noise(rng);
      dr.doc.embedding[k] = centroids[dr.topic][k] + coord_sd * eps + lsign * spec.leaning_offset * lean_dir[k];
    }
    const std::string topic_word(vocab[dr.topic % vocab.size()]);
    std::string headline = topic_word;
    headline[0] = char(std::toupper(static_cast<unsigned char>(headline[0])));
    headline += ' ';
    headline += verbs[rng() % verbs.size()];
    for (int w = 0; w < 3; ++w) {
      headline += ' ';
      headline += vocab[rng() % vocab.size()];
    }
    dr.doc.headline = std::move(headline);
    dr.doc.body = "Coverage of the " + topic_word + " story from " + dr.doc.source + ".";
    dr.doc.keywords.push_back("topic-" + std::to_string(dr.topic));
  }

  std::stable_sort(drafts.begin(), drafts.end(),
                   [](const Draft& a, const Draft& b) { return a.seconds < b.seconds; });

  for (std::size_t p = 0; p < spec.keyword_plants.size(); ++p) {
    const auto& kp = spec.keyword_plants[p];
    const auto count = std::size_t(std::llround(kp.fraction * double(spec.n)));
    std::vector<std::size_t> order(spec.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t q = 0; q < count; ++q) {
      auto& doc = drafts[order[q]].doc;
      auto first_space = doc.headline.find(' ');
      doc.headline.insert(first_space, " " + kp.tag);
      doc.keywords.push_back(kp.tag);
      for (std::size_t k = 0; k < d; ++k) doc.embedding[k] += kp.offset * tag_dirs[p][k];
    }
  }

  Corpus c;
  c.embedding_dim = d;
  c.epoch = spec.epoch + drafts.front().seconds;
  for (auto& dr : drafts) {
    dr.doc.id = c.documents.size();
    dr.doc.timestamp = double(dr.seconds - drafts.front().seconds) / 86400.0;
    c.documents.push_back(std::move(dr.doc));
  }
  return c;
}

}  // namespace narrmap
