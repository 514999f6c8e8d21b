#include "heroes/data/session.h"

#include <algorithm>

namespace heroes {

bool QuerySession::has_true_relevance() const {
  return !items.empty() && std::all_of(items.begin(), items.end(), [](const Item& it) {
    return it.true_click_rel.has_value() && it.true_conv_rel.has_value();
  });
}

std::vector<int> QuerySession::clicks() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const Item& it : items) out.push_back(it.click);
  return out;
}

std::vector<int> QuerySession::conversions() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const Item& it : items) out.push_back(it.conversion);
  return out;
}

}  // namespace heroes
