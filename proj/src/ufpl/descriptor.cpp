#include "ufpl/descriptor.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "ufpl/errors.hpp"

namespace ufpl {

double parse_real(std::string_view text, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    throw_invalid(fmt::format("{}: '{}' is not a finite number", what, text));
  }
  return value;
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw_invalid(
        fmt::format("{}: '{}' is not a nonnegative integer", what, text));
  }
  return value;
}

Descriptor Descriptor::parse(std::string_view text) {
  Descriptor d;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    auto eq = token.find('=');
    if (eq == std::string::npos) {
      if (!d.params_.empty()) {
        throw_invalid(fmt::format(
            "'{}': bare word after key=value parameters", token));
      }
      d.words_.push_back(token);
      continue;
    }
    auto key = token.substr(0, eq);
    if (key.empty()) throw_invalid(fmt::format("'{}': empty key", token));
    if (!d.params_.emplace(key, token.substr(eq + 1)).second) {
      throw_invalid(fmt::format("duplicate key '{}'", key));
    }
  }
  if (d.words_.empty()) throw_invalid("empty descriptor");
  return d;
}

const std::string& Descriptor::word(std::size_t i, std::string_view what) const {
  if (i >= words_.size()) throw_invalid(fmt::format("missing {}", what));
  return words_[i];
}

bool Descriptor::has(const std::string& key) const {
  return params_.count(key) != 0;
}

std::optional<std::string> Descriptor::text(const std::string& key) const {
  auto it = params_.find(key);
  if (it == params_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::string Descriptor::text(const std::string& key,
                             std::string_view fallback) const {
  auto value = text(key);
  return value ? *value : std::string(fallback);
}

std::optional<double> Descriptor::number(const std::string& key) const {
  auto value = text(key);
  if (!value) return std::nullopt;
  return parse_real(*value, key);
}

double Descriptor::number(const std::string& key, double fallback) const {
  auto value = number(key);
  return value ? *value : fallback;
}

double Descriptor::required_number(const std::string& key) const {
  auto value = number(key);
  if (!value) throw_invalid(fmt::format("missing required parameter '{}'", key));
  return *value;
}

std::size_t Descriptor::count(const std::string& key, std::size_t fallback) const {
  auto value = text(key);
  return value ? static_cast<std::size_t>(parse_u64(*value, key)) : fallback;
}

std::uint64_t Descriptor::u64(const std::string& key,
                              std::uint64_t fallback) const {
  auto value = text(key);
  return value ? parse_u64(*value, key) : fallback;
}

void Descriptor::reject_unknown(std::string_view context) const {
  for (const auto& [key, value] : params_) {
    if (!used_.count(key)) {
      throw_invalid(fmt::format("{}: unknown parameter '{}'", context, key));
    }
  }
}

}  // namespace ufpl
