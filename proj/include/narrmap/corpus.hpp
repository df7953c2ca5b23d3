// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace narrmap {

enum class Leaning { left, center, right, none };

std::string_view to_string(Leaning l) noexcept;
/// Parses "left" / "center" / "right" / "none"; throws ParameterError otherwise.
Leaning parse_leaning(std::string_view s);

struct Document {
  std::size_t id = 0;
  double timestamp = 0.0;  // days since the corpus epoch
  std::string headline;
  std::string body;
  std::string source;
  Leaning leaning = Leaning::none;
  std::vector<std::string> keywords;
  std::vector<double> embedding;
};

struct Corpus {
  std::vector<Document> documents;
  std::int64_t epoch = 0;  // unix seconds of timestamp 0
  std::size_t embedding_dim = 0;

  std::size_t size() const noexcept { return documents.size(); }
  const Document& operator[](std::size_t i) const { return documents.at(i); }
};

/// Formats unix seconds as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_datetime(std::int64_t unix_seconds);
/// Accepts "YYYY-MM-DD", optionally followed by "THH:MM:SS" and "Z".
std::int64_t parse_datetime(std::string_view text);

Corpus load_corpus(const std::filesystem::path& path);
/// Parses JSON-lines records without validating; `origin` names the source in messages.
Corpus parse_corpus(std::istream& in, const std::string& origin);

/// Writes the record file plus its `<path>.manifest.json` sidecar.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Serialized record stream exactly as `save_corpus` writes it.
std::string serialize_corpus(const Corpus& corpus);

/// Empty result means every invariant holds.
std::vector<std::string> validate_corpus(const Corpus& corpus);

struct KeywordPlant {
  std::string tag;
  double fraction = 0.0;
  double offset = 0.5;  // magnitude of the embedding shift given to tagged documents
};

struct SyntheticSpec {
  std::size_t n = 200;
  std::size_t topics = 4;
  double leaning_mix[3] = {0.35, 0.3, 0.35};  // left, center, right
  std::vector<KeywordPlant> keyword_plants;
  double time_span_days = 120.0;
  double noise_scale = 0.35;
  std::uint64_t seed = 1;
  std::size_t embedding_dim = 16;
  double leaning_offset = 0.6;
  std::int64_t epoch = 1625961600;  // 2021-07-11T00:00:00Z
};

Corpus generate_synthetic_corpus(const SyntheticSpec& spec);

/// True when the headline or any keyword contains `tag`, case-insensitively.
bool has_keyword(const Document& doc, std::string_view tag);

}  // namespace narrmap
