#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace heroes {

struct Item {
  std::vector<double> features;
  int click = 0;
  int conversion = 0;
  // Planted relevances, present only for synthetic data.
  std::optional<double> true_click_rel;
  std::optional<double> true_conv_rel;
};

// One ranked list for a query, in display order.
struct QuerySession {
  std::int64_t query_id = 0;
  std::vector<Item> items;

  std::size_t size() const { return items.size(); }
  bool has_true_relevance() const;
  std::vector<int> clicks() const;
  std::vector<int> conversions() const;
};

using Corpus = std::vector<QuerySession>;

}  // namespace heroes
