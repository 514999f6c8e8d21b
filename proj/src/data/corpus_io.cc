#include "heroes/data/corpus_io.h"

#include <fstream>
#include <string>

#include "heroes/errors.h"
#include "json.hpp"

namespace heroes {

using nlohmann::json;

namespace {

json to_json(const QuerySession& s) {
  json items = json::array();
  for (const Item& it : s.items) {
    json j{{"features", it.features}, {"click", it.click}, {"conversion", it.conversion}};
    if (it.true_click_rel) j["true_click_rel"] = *it.true_click_rel;
    if (it.true_conv_rel) j["true_conv_rel"] = *it.true_conv_rel;
    items.push_back(std::move(j));
  }
  return json{{"query_id", s.query_id}, {"items", std::move(items)}};
}

int binary_field(const json& j, const char* key, std::size_t line) {
  const int v = j.at(key).get<int>();
  if (v != 0 && v != 1) {
    throw DataError("line " + std::to_string(line) + ": " + key + " must be 0 or 1");
  }
  return v;
}

QuerySession from_json(const json& j, std::size_t line) {
  QuerySession s;
  s.query_id = j.at("query_id").get<std::int64_t>();
  for (const json& ji : j.at("items")) {
    Item it;
    it.features = ji.at("features").get<std::vector<double>>();
    it.click = binary_field(ji, "click", line);
    it.conversion = binary_field(ji, "conversion", line);
    if (auto f = ji.find("true_click_rel"); f != ji.end()) it.true_click_rel = f->get<double>();
    if (auto f = ji.find("true_conv_rel"); f != ji.end()) it.true_conv_rel = f->get<double>();
    s.items.push_back(std::move(it));
  }
  return s;
}

}  // namespace

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const QuerySession& s : corpus) out << to_json(s).dump() << '\n';
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_corpus(out, corpus);
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      corpus.push_back(from_json(json::parse(text), line));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  validate_corpus(corpus);
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_corpus(in);
}

void validate_corpus(const Corpus& corpus) {
  std::size_t f = 0;
  bool first = true;
  for (const QuerySession& s : corpus) {
    const std::string q = "query " + std::to_string(s.query_id);
    if (s.items.empty()) throw DataError(q + ": empty item list");
    for (const Item& it : s.items) {
      if (first) {
        f = it.features.size();
        first = false;
      }
      if (it.features.size() != f) throw DataError(q + ": inconsistent feature length");
      if (it.conversion > it.click) throw DataError(q + ": conversion without click");
    }
  }
}

}  // namespace heroes
