#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace nsc {

/// Built-in benchmark configurations; the files under benchmarks/ hold the same documents.
///   scalar   x' = x + u + 0.5 sin t, K = 2, c = x^2 + u^2
///   planar   2-state oscillator, B = I, K = I, two-tone disturbance, c = |x|^2 + |u|^2
///   tracking scalar system tracking 0.3 sin(t + 0.4)
nlohmann::json builtin_benchmark(const std::string& name);
std::vector<std::string> builtin_benchmark_names();

}  // namespace nsc
