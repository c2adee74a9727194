#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "ishne/error.hpp"

namespace ishne {

// Shortest decimal form that round-trips the exact double. All text formats
// (graph files, checkpoints, epoch logs, embeddings) use this so that a
// write/read cycle is bit-exact.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    fail(ErrorCode::parse_error, "bad number '" + std::string(text) + "'");
  return v;
}

inline long long parse_int(std::string_view text) {
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    fail(ErrorCode::parse_error, "bad integer '" + std::string(text) + "'");
  return v;
}

}  // namespace ishne
