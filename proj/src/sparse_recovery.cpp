#include "turnsample/sparse_recovery.hpp"

#include <algorithm>
#include <stdexcept>

namespace turnsample {

std::vector<DetectorGrid::Item> DetectorGrid::recover() const {
  std::vector<Item> items;
  for (const auto& cell : cells_) {
    if (auto got = cell.decode(universe_, r_)) {
      items.push_back({got->index, got->value});
    }
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.index < b.index; });
  items.erase(std::unique(items.begin(), items.end(),
                          [](const Item& a, const Item& b) { return a.index == b.index; }),
              items.end());
  return items;
}

void DetectorGrid::merge(const DetectorGrid& other) {
  if (other.cells_.size() != cells_.size() || other.seed_ != seed_) {
    throw std::invalid_argument("detector grid mismatch in merge");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i].merge(other.cells_[i]);
}

}  // namespace turnsample
