#pragma once

#include <filesystem>
#include <iosfwd>

#include "heroes/data/session.h"

namespace heroes {

// One session per line:
// {"query_id": n, "items": [{"features": [...], "click": 0|1, "conversion": 0|1,
//   "true_click_rel": r, "true_conv_rel": r}]}; the relevance fields are omitted when absent.
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
Corpus read_corpus(std::istream& in);
Corpus read_corpus(const std::filesystem::path& path);

// Throws DataError naming the query when labels break v <= c or features are ragged.
void validate_corpus(const Corpus& corpus);

}  // namespace heroes
