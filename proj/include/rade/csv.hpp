// Locale-independent CSV value formatting. Numbers go through std::to_chars
// so output is byte-identical across runs and environments.
#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <system_error>

namespace rade {

// Shortest-round-trip general format with six significant digits.
inline std::string format_g6(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 6);
  if (res.ec != std::errc{}) throw std::runtime_error("format_g6: conversion failed");
  return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc{}) throw std::runtime_error("format_int: conversion failed");
  return std::string(buf, res.ptr);
}

}  // namespace rade
