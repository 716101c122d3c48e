#pragma once

// Minimal standalone SVG charts for the report bundle.

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blurgeom::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

std::string scatter(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                    std::span<const Series> series);

struct Bar {
  std::string label;
  double value;
  std::optional<double> lo;
  std::optional<double> hi;
};

std::string bars(const std::string& title, const std::string& ylabel, std::span<const Bar> bars);

}  // namespace blurgeom::svg
