#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mstep/oracle/qfunction.hpp"

namespace mstep {

// Dense suffix-indexed tables with decimal-string cells ("null" marks an undefined cell).
nlohmann::ordered_json qfunction_to_json(const QFunction& f);
QFunction qfunction_from_json(const nlohmann::ordered_json& doc, const SuffixSpace& space);

std::string serialize_class(const FunctionClassPair& pair);
FunctionClassPair parse_class(const std::string& text);

void save_class(const FunctionClassPair& pair, const std::filesystem::path& path);
FunctionClassPair load_class(const std::filesystem::path& path);

}  // namespace mstep
