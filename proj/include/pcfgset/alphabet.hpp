#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pcfgset {

inline constexpr std::size_t kStandardAlphabetSize = 520;

// Literal symbols A..Z, then A1..Z1, A2..Z2, ... up to A19..Z19.
class Alphabet {
 public:
  explicit Alphabet(std::size_t size = kStandardAlphabetSize);

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& operator[](std::size_t i) const { return symbols_[i]; }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  std::optional<std::size_t> index_of(std::string_view symbol) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace pcfgset
