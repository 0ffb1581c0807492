#include "pcfgset/alphabet.hpp"

#include "pcfgset/error.hpp"

namespace pcfgset {

Alphabet::Alphabet(std::size_t size) {
  if (size == 0 || size > kStandardAlphabetSize) {
    throw Error("alphabet size must be in [1, " + std::to_string(kStandardAlphabetSize) + "]");
  }
  symbols_.reserve(size);
  for (int suffix = 0; suffix <= 19 && symbols_.size() < size; ++suffix) {
    for (char c = 'A'; c <= 'Z' && symbols_.size() < size; ++c) {
      std::string s(1, c);
      if (suffix > 0) s += std::to_string(suffix);
      symbols_.push_back(std::move(s));
    }
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) index_.emplace(symbols_[i], i);
}

std::optional<std::size_t> Alphabet::index_of(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace pcfgset
