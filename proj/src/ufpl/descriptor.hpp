#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ufpl {

// Whitespace-separated descriptor: leading bare words followed by key=value
// pairs, e.g. "fpl mu=0.618" or "adversary thm1 delta=0.05 horizon=20".
class Descriptor {
 public:
  static Descriptor parse(std::string_view text);

  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::string& word(std::size_t i, std::string_view what) const;

  bool has(const std::string& key) const;
  std::string text(const std::string& key, std::string_view fallback) const;
  std::optional<std::string> text(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::optional<double> number(const std::string& key) const;
  double required_number(const std::string& key) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;

  // Throws naming the first key never read through the accessors above.
  void reject_unknown(std::string_view context) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::string> params_;
  mutable std::set<std::string> used_;
};

double parse_real(std::string_view text, std::string_view what);
std::uint64_t parse_u64(std::string_view text, std::string_view what);

}  // namespace ufpl
