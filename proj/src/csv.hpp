#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cfverse::detail {

std::string trim(std::string_view s);
std::vector<std::vector<std::string>> split_csv(const std::string& text);
std::optional<double> parse_double(const std::string& cell);
std::optional<int> parse_int(const std::string& cell);

}  // namespace cfverse::detail
