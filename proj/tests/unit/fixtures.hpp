// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "narrmap/corpus.hpp"

namespace fixtures {

inline narrmap::Document doc(double day, std::vector<double> embedding, narrmap::Leaning leaning = narrmap::Leaning::none,
                             std::string headline = "event") {
  narrmap::Document d;
  d.timestamp = day;
  d.embedding = std::move(embedding);
  d.leaning = leaning;
  d.headline = std::move(headline);
  d.source = "Wire";
  return d;
}

/// Builds a corpus from documents already in chronological order.
inline narrmap::Corpus corpus_of(std::vector<narrmap::Document> docs) {
  narrmap::Corpus c;
  c.epoch = 1625961600;
  c.embedding_dim = docs.empty() ? 0 : docs.front().embedding.size();
  for (std::size_t i = 0; i < docs.size(); ++i) docs[i].id = i;
  c.documents = std::move(docs);
  return c;
}

inline std::shared_ptr<const narrmap::Corpus> synthetic(std::size_t n, std::uint64_t seed = 7,
                                                        std::vector<narrmap::KeywordPlant> plants = {}) {
  narrmap::SyntheticSpec s;
  s.n = n;
  s.seed = seed;
  s.keyword_plants = std::move(plants);
  return std::make_shared<const narrmap::Corpus>(narrmap::generate_synthetic_corpus(s));
}

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("narrmap-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace fixtures
