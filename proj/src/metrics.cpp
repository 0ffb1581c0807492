#include "pcfgset/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "pcfgset/error.hpp"

namespace pcfgset {

namespace {

std::optional<long long> as_number(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> as_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace

bool sequence_accuracy(const TokenSeq& prediction, const TokenSeq& target) noexcept { return prediction == target; }

bool pairwise_consistency(const TokenSeq& a, const TokenSeq& b) noexcept { return a == b; }

bool natural_less(const std::string& a, const std::string& b) {
  const auto na = as_number(a), nb = as_number(b);
  if (na && nb) return *na < *nb;
  if (na.has_value() != nb.has_value()) return na.has_value();
  return a < b;
}

Aggregate aggregate(std::span<const char> scores, std::span<const std::string> keys) {
  if (scores.size() != keys.size()) {
    throw LengthMismatchError("aggregate: " + std::to_string(scores.size()) + " scores but " +
                              std::to_string(keys.size()) + " keys");
  }
  Aggregate out;
  out.count = scores.size();
  std::map<std::string, std::pair<std::size_t, std::size_t>, decltype(&natural_less)> strata(&natural_less);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t s = scores[i] ? 1 : 0;
    hits += s;
    auto& cell = strata[keys[i]];
    cell.first += s;
    ++cell.second;
  }
  if (out.count) out.overall = static_cast<double>(hits) / static_cast<double>(out.count);
  for (const auto& [label, cell] : strata) {
    out.strata.push_back({label, static_cast<double>(cell.first) / static_cast<double>(cell.second), cell.second});
  }
  return out;
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw LengthMismatchError("cosine distance between vectors of different dimension");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ZeroVectorError("cosine distance of a zero vector");
  const double cos = std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
  return 1.0 - cos;
}

EmbeddingTable EmbeddingTable::read(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_tokens(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && as_number(fields[0]) && as_number(fields[1])) {
      table.dim_ = static_cast<std::size_t>(*as_number(fields[1]));
      continue;
    }
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto x = as_double(fields[i]);
      if (!x) throw Error("embedding line " + std::to_string(line_no) + ": '" + fields[i] + "' is not a number");
      v.push_back(*x);
    }
    try {
      table.add(fields[0], std::move(v));
    } catch (const Error& e) {
      throw Error("embedding line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file " + path.string());
  return read(in);
}

void EmbeddingTable::add(const std::string& token, std::vector<double> vector) {
  if (vector.empty()) throw Error("token '" + token + "' has no vector");
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) {
    throw Error("token '" + token + "' has dimension " + std::to_string(vector.size()) + ", expected " +
                std::to_string(dim_));
  }
  if (!vectors_.emplace(token, std::move(vector)).second) throw Error("token '" + token + "' appears twice");
}

const std::vector<double>& EmbeddingTable::at(const std::string& token) const {
  auto it = vectors_.find(token);
  if (it == vectors_.end()) throw MissingTokenError(token);
  return it->second;
}

SynonymDistanceReport synonym_distance_report(const EmbeddingTable& table, const SynonymMap& map,
                                              std::span<const BaseFunction> functions) {
  SynonymDistanceReport out;
  for (const auto& [base, syn] : map.entries()) {
    const auto& f = table.at(base);
    SynonymDistanceRow row{base, cosine_distance(f, table.at(syn)), 0.0};
    std::size_t others = 0;
    for (auto fn : functions) {
      const std::string name(base_name(fn));
      if (name == base) continue;
      row.other += cosine_distance(f, table.at(name));
      ++others;
    }
    if (others) row.other /= static_cast<double>(others);
    out.mean_synonym += row.synonym;
    out.mean_other += row.other;
    out.rows.push_back(row);
  }
  if (!out.rows.empty()) {
    out.mean_synonym /= static_cast<double>(out.rows.size());
    out.mean_other /= static_cast<double>(out.rows.size());
  }
  return out;
}

}  // namespace pcfgset
