#include "mstep/oracle/class_io.hpp"

#include <cmath>
#include <limits>

#include "mstep/core/errors.hpp"
#include "mstep/core/pomdp_io.hpp"

namespace mstep {

using nlohmann::ordered_json;

ordered_json qfunction_to_json(const QFunction& f) {
  ordered_json steps = ordered_json::array();
  for (int h = 1; h <= f.horizon(); ++h) {
    ordered_json layer = ordered_json::array();
    for (double v : f.layer(h)) {
      layer.push_back(std::isnan(v) ? ordered_json(nullptr) : ordered_json(format_decimal(v)));
    }
    steps.push_back(std::move(layer));
  }
  return steps;
}

QFunction qfunction_from_json(const ordered_json& doc, const SuffixSpace& space) {
  QFunction f(space);
  if (!doc.is_array() || static_cast<int>(doc.size()) != space.horizon()) {
    throw IoError("Q-function table has the wrong number of steps");
  }
  for (int h = 1; h <= space.horizon(); ++h) {
    const auto& layer = doc[h - 1];
    auto& out = f.layer(h);
    if (!layer.is_array() || layer.size() != out.size()) {
      throw IoError("Q-function table has the wrong size at step " + std::to_string(h));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = layer[i].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                  : parse_decimal(layer[i].get<std::string>());
    }
  }
  return f;
}

std::string serialize_class(const FunctionClassPair& pair) {
  if (pair.F.empty()) throw IoError("cannot serialize an empty class");
  const SuffixSpace& space = pair.F.front().space();
  ordered_json doc;
  doc["H"] = space.horizon();
  doc["m"] = space.memory();
  doc["O"] = space.observation_count();
  doc["A"] = space.action_count();
  doc["realizable"] = pair.realizable;
  doc["complete"] = pair.complete;
  doc["qstar_index"] = pair.qstar_index ? ordered_json(*pair.qstar_index) : ordered_json(nullptr);
  ordered_json F = ordered_json::array();
  for (std::size_t i = 0; i < pair.F.size(); ++i) {
    F.push_back(ordered_json{{"name", i < pair.names.size() ? pair.names[i] : "f" + std::to_string(i)},
                             {"tables", qfunction_to_json(pair.F[i])}});
  }
  doc["F"] = std::move(F);
  ordered_json G = ordered_json::array();
  for (std::size_t i = pair.F.size(); i < pair.G.size(); ++i) {
    G.push_back(ordered_json{{"tables", qfunction_to_json(pair.G[i])}});
  }
  doc["G_extra"] = std::move(G);
  return doc.dump(1) + "\n";
}

FunctionClassPair parse_class(const std::string& text) {
  try {
    const auto doc = ordered_json::parse(text);
    const SuffixSpace space(doc.at("H").get<int>(), doc.at("m").get<int>(),
                            doc.at("O").get<int>(), doc.at("A").get<int>());
    FunctionClassPair pair;
    pair.realizable = doc.at("realizable").get<bool>();
    pair.complete = doc.at("complete").get<bool>();
    if (!doc.at("qstar_index").is_null()) pair.qstar_index = doc.at("qstar_index").get<int>();
    for (const auto& e : doc.at("F")) {
      pair.names.push_back(e.at("name").get<std::string>());
      pair.F.push_back(qfunction_from_json(e.at("tables"), space));
    }
    if (pair.F.empty()) throw IoError("function class is empty");
    pair.G = pair.F;
    for (const auto& e : doc.at("G_extra")) pair.G.push_back(qfunction_from_json(e.at("tables"), space));
    return pair;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed class file: ") + e.what());
  } catch (const ModelError& e) {
    throw IoError(std::string("malformed class file: ") + e.what());
  }
}

void save_class(const FunctionClassPair& pair, const std::filesystem::path& path) {
  write_text_file(path, serialize_class(pair));
}

FunctionClassPair load_class(const std::filesystem::path& path) {
  return parse_class(read_text_file(path));
}

}  // namespace mstep
