#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mstep/core/pomdp.hpp"

namespace mstep {

// Shortest decimal spelling that parses back to the same double.
std::string format_decimal(double value);
// Correctly rounded parse of a decimal string; throws IoError on malformed input.
double parse_decimal(const std::string& text);

nlohmann::ordered_json pomdp_to_json(const Pomdp& pomdp);
Pomdp pomdp_from_json(const nlohmann::ordered_json& doc);

std::string serialize_pomdp(const Pomdp& pomdp);
Pomdp parse_pomdp(const std::string& text);

void save_pomdp(const Pomdp& pomdp, const std::filesystem::path& path);
Pomdp load_pomdp(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mstep
